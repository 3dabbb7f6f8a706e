#include "dimpim/asymptotics.hpp"

#include <cmath>
#include <sstream>

#include "dimpim/errors.hpp"
#include "dimpim/linalg.hpp"

namespace dimpim {

void ConstraintSpec::validate() const {
    if (c.rows() < 1) throw DomainError("ConstraintSpec: need at least one constraint row");
    if (c.rows() > c.cols()) {
        throw DomainError("ConstraintSpec: more constraints than parameters");
    }
    if (zeta0.size() != c.rows()) {
        throw DomainError("ConstraintSpec: zeta0 length must match the number of rows of C");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 1e-10 * smax)) {
        throw DomainError("ConstraintSpec: C is not of full row rank");
    }
}

void Direction::validate() const {
    if (eta.size() < 1) throw DomainError("Direction: eta must be nonempty");
    if (!std::isfinite(scale)) throw DomainError("Direction: scale must be finite");
    const double norm = eta.norm();
    if (std::abs(norm - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "Direction: eta must have unit norm (got " << norm << ")";
        throw DomainError(msg.str());
    }
}

Eigen::MatrixXd kl_projection_derivative(const Eigen::MatrixXd& info_f,
                                         const Eigen::MatrixXd& cross_fg) {
    if (info_f.rows() != cross_fg.rows()) {
        throw DomainError(
            "kl_projection_derivative: information and cross-moment row dimensions differ");
    }
    return spd_solve(info_f, cross_fg, "kl_projection_derivative");
}

double noncentrality(const Direction& dir, const ConstraintSpec& cs,
                     const Eigen::MatrixXd& info_f, const Eigen::MatrixXd& dtheta_domega) {
    dir.validate();
    cs.validate();
    if (cs.c.cols() != dtheta_domega.rows()) {
        throw DomainError("noncentrality: C and the projection derivative are incompatible");
    }
    if (dtheta_domega.cols() != dir.eta.size()) {
        throw DomainError("noncentrality: eta length does not match the true-parameter space");
    }
    if (info_f.rows() != cs.c.cols()) {
        throw DomainError("noncentrality: information dimension does not match C");
    }

    const Eigen::VectorXd v = cs.c * (dtheta_domega * dir.eta);
    // r x r matrix C I_F^{-1} C^T, SPD because C has full row rank.
    const Eigen::MatrixXd cic =
        cs.c * spd_solve(info_f, cs.c.transpose(), "noncentrality (information)");
    const double quad = v.dot(spd_solve(cic, v, "noncentrality (constraint block)").col(0));
    const double delta = dir.scale * dir.scale * quad;
    return delta > 0.0 ? delta : 0.0;
}

}  // namespace dimpim
