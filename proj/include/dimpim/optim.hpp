#pragma once

#include <Eigen/Dense>
#include <functional>

namespace dimpim {

// value = f(x), with the gradient written to *grad when grad != nullptr.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct OptimResult {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;  // sup-norm of the gradient reached gtol
};

// Quasi-Newton (BFGS) minimizer with Armijo backtracking line search.
// Deterministic; suited to the smooth low-dimensional objectives here.
OptimResult bfgs_minimize(const ObjectiveFn& fn, const Eigen::VectorXd& x0,
                          int max_iterations, double gtol);

}  // namespace dimpim
