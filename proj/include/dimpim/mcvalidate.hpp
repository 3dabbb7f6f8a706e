#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dimpim/asymptotics.hpp"
#include "dimpim/expectation.hpp"
#include "dimpim/models.hpp"
#include "dimpim/scenarios.hpp"

namespace dimpim {

struct Dataset {
    Eigen::MatrixXd x;  // n x p covariate draws
    Eigen::VectorXd y;  // n responses
    int n() const { return static_cast<int>(y.size()); }
    int p() const { return static_cast<int>(x.cols()); }
};

struct FitResult {
    Eigen::VectorXd estimates;  // flat layout of the fitted family
    bool converged = false;     // log-likelihood gradient norm < 1e-6
    double loglik = 0.0;
    int iterations = 0;
    int n_obs = 0;
};

// True parameters drifted distance delta / sqrt(n) from the scenario's null
// along the scenario's direction, as a flat vector in the truth family.
Eigen::VectorXd local_alternative(const PowerScenario& scenario, double delta, int n);

// X rows iid from dist; Y_i = mean(truth, omega_n, X_i) + sigma Z_i.
// Deterministic given the seed.
Dataset generate_data(Family truth, const Eigen::VectorXd& omega_n,
                      const CovariateDistribution& dist, int n, std::uint64_t seed);

// Least squares on the expanded design [1, X, pairwise products]; the
// variance estimate uses the MLE divisor n.
FitResult fit_pim(const Dataset& data);

// Maximum likelihood for the power-mean family by BFGS on
// (beta0, log beta, log lambda, log sigma2); default start: additive least
// squares (negative betas clipped to 1e-6), lambda = 1.
FitResult fit_dim(const Dataset& data, const Eigen::VectorXd* init = nullptr,
                  int max_iterations = 500);

// W = n (C theta_hat - zeta0)^T {C I^{-1}(theta_hat) C^T}^{-1} (C theta_hat - zeta0),
// with info_at the expected information evaluated at the estimates.
double wald_statistic(const FitResult& fit, const ConstraintSpec& cs,
                      const Eigen::MatrixXd& info_at);

struct RejectionResult {
    double delta = 0.0;  // drift scale for this entry
    double rate = 0.0;   // rejections / converged replicates
    double se = 0.0;     // sqrt(rate (1 - rate) / converged)
    double nonconverged_fraction = 0.0;
    int reps_total = 0;
    int reps_converged = 0;
};

// Empirical rejection rate of the fitted family's interaction Wald test at
// level scenario.alpha, one entry per scenario.delta_grid value.  Replicates
// get counter-derived seeds, so results do not depend on the thread count.
// Throws ConvergenceError if 1% or more of the replicates fail to converge.
std::vector<RejectionResult> rejection_rate(const PowerScenario& scenario, Family fit,
                                            int n, int reps, std::uint64_t seed,
                                            int threads = 1);

}  // namespace dimpim
