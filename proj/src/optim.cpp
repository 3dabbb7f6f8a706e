#include "dimpim/optim.hpp"

#include <cmath>

#include "dimpim/errors.hpp"

namespace dimpim {

OptimResult bfgs_minimize(const ObjectiveFn& fn, const Eigen::VectorXd& x0,
                          int max_iterations, double gtol) {
    if (max_iterations < 1) throw DomainError("bfgs_minimize: need at least one iteration");
    const Eigen::Index d = x0.size();

    Eigen::VectorXd x = x0;
    Eigen::VectorXd grad(d);
    double fx = fn(x, &grad);
    if (!std::isfinite(fx)) {
        throw DomainError("bfgs_minimize: objective is not finite at the starting point");
    }

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(d, d);
    OptimResult result;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() < gtol) {
            result.converged = true;
            break;
        }

        Eigen::VectorXd dir = -(h_inv * grad);
        double slope = grad.dot(dir);
        if (!(slope < 0.0)) {
            // Curvature information went bad; restart from steepest descent.
            h_inv.setIdentity();
            dir = -grad;
            slope = grad.dot(dir);
        }

        // Armijo backtracking from a unit step.
        constexpr double c1 = 1e-4;
        double t = 1.0;
        double f_new = 0.0;
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            x_new = x + t * dir;
            f_new = fn(x_new, nullptr);
            if (std::isfinite(f_new) && f_new <= fx + c1 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // no descent possible at double precision

        Eigen::VectorXd grad_new(d);
        f_new = fn(x_new, &grad_new);

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (iter == 0) {
                // Scale the initial inverse Hessian to the problem (Nocedal
                // & Wright eq. 6.20) before the first update.
                h_inv.setIdentity();
                h_inv *= sy / y.squaredNorm();
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = h_inv * y;
            // BFGS inverse update: H += (s y' H + H y s') terms folded in.
            h_inv.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
            h_inv.noalias() += (rho * rho * y.dot(hy) + rho) * (s * s.transpose());
        }

        x = x_new;
        fx = f_new;
        grad = grad_new;
    }

    if (!result.converged && grad.lpNorm<Eigen::Infinity>() < gtol) {
        result.converged = true;
    }
    result.x = x;
    result.value = fx;
    result.gradient = grad;
    result.iterations = iter;
    return result;
}

}  // namespace dimpim
