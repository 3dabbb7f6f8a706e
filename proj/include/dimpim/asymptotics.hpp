#pragma once

#include <Eigen/Dense>

namespace dimpim {

// Linear hypothesis C theta = zeta0 with C of full row rank r.
struct ConstraintSpec {
    Eigen::MatrixXd c;      // r x flat_dim
    Eigen::VectorXd zeta0;  // length r
    int r() const { return static_cast<int>(c.rows()); }
    void validate() const;  // checks shapes and full row rank
};

// Local-alternative direction: true parameters drift from the null along
// `eta` (unit norm) at rate scale / sqrt(n).
struct Direction {
    Eigen::VectorXd eta;
    double scale = 0.0;  // the Delta multiplier
    void validate() const;
};

// Derivative of the KL-projected fitted parameters with respect to the true
// parameters at the shared null point: solve I_F * D = C_FG for D.  When the
// fitted family contains the truth, C_FG = I_F and D is the identity.
Eigen::MatrixXd kl_projection_derivative(const Eigen::MatrixXd& info_f,
                                         const Eigen::MatrixXd& cross_fg);

// Noncentrality of the Wald test along a local alternative:
//   delta = scale^2 * (C D eta)^T (C I_F^{-1} C^T)^{-1} (C D eta).
double noncentrality(const Direction& dir, const ConstraintSpec& cs,
                     const Eigen::MatrixXd& info_f, const Eigen::MatrixXd& dtheta_domega);

}  // namespace dimpim
