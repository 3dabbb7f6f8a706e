#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dimpim/asymptotics.hpp"
#include "dimpim/expectation.hpp"
#include "dimpim/models.hpp"

namespace dimpim {

// Round to nearest integer, ties away from zero.
long round_half_away(double v);

// The three scalar knobs that shape an interaction-direction vector over the
// gamma coordinates:
//   f1: fraction of the p(p-1)/2 pairs that are active,
//   f2: fraction of the active pairs with positive sign,
//   f3: magnitude ratio of positive to negative entries.
struct PrimaryFactors {
    double f1 = 0.0;
    double f2 = 0.0;
    double f3 = 1.0;
    void validate() const;
};

// Direction over the gamma coordinates: with m = p(p-1)/2 pairs and
// k = round(f1 m) active (k >= 1 required), the first m - k entries are 0,
// the next round(f2 k) entries are +f3 c and the rest are -c, with c > 0
// normalizing the vector to unit length.
Eigen::VectorXd build_eta_from_factors(int p, const PrimaryFactors& factors);

// Full-parameter-space drift directions (unit norm, flat layout).
Eigen::VectorXd dim_direction(int p);                                   // e_lambda
Eigen::VectorXd pim_direction(int p, const Eigen::VectorXd& eta_gamma);  // gamma block

// Wald constraint that the family's interaction parameters sit at their
// additive-null values: lambda = 1 for dim, gamma = 0 for pim.
ConstraintSpec build_constraint(Family fit, int p);

// Null point, truth family, full-space drift direction, and test settings.
struct PowerScenario {
    CovariateDistribution dist;
    AdditiveParams params;
    Family truth = Family::Dim;
    Eigen::VectorXd eta;  // unit vector in the truth family's flat space
    double alpha = 0.05;
    std::vector<double> delta_grid;  // drift scales, strictly increasing
    void validate() const;
};

std::vector<double> make_delta_grid(double lo, double hi, int steps);

struct PowerPoint {
    double delta = 0.0;  // drift scale (the Delta axis, not the noncentrality)
    double power = 0.0;
};

// Null-point moment matrices for a (fit, truth) pair.
struct MomentSet {
    Family fit = Family::Dim;
    Family truth = Family::Dim;
    Eigen::MatrixXd info_fit;    // I_F
    Eigen::MatrixXd info_truth;  // I_G
    Eigen::MatrixXd cross;       // C_FG = E[s_F s_G^T]
};

MomentSet compute_moments(Family fit, Family truth, const AdditiveParams& params,
                          const CovariateDistribution& dist);

// Asymptotic power of the fit family's interaction Wald test along the
// scenario's drift, one point per delta_grid entry.  When fit == truth the
// projection derivative is the identity; otherwise it solves
// I_F D = C_FG at the null.
std::vector<PowerPoint> power_curve(const PowerScenario& scenario, Family fit);

struct GridCell {
    PrimaryFactors factors;
    std::vector<PowerPoint> dim_fit;
    std::vector<PowerPoint> pim_fit;
};

// Power curves for both fitted families over the Cartesian product of factor
// levels, with truth = pim drifting along build_eta_from_factors.  The
// expensive null-point moments are computed once and shared across cells.
std::vector<GridCell> factor_grid_sweep(const CovariateDistribution& dist,
                                        const AdditiveParams& params, double alpha,
                                        const std::vector<double>& delta_grid,
                                        const std::vector<double>& f1_levels,
                                        const std::vector<double>& f2_levels,
                                        const std::vector<double>& f3_levels,
                                        int threads = 1);

}  // namespace dimpim
