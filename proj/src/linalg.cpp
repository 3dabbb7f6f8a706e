#include "dimpim/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dimpim/errors.hpp"

namespace dimpim {

namespace {

constexpr double kMaxCondition = 1e12;

// Eigendecomposition of a (symmetrized) matrix, shared by the guarded ops.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const Eigen::MatrixXd& a,
                                                         const std::string& context) {
    if (a.rows() != a.cols()) {
        throw DomainError(context + ": matrix is not square");
    }
    Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) {
        throw SingularMatrixError(context + ": eigendecomposition failed",
                                  std::numeric_limits<double>::infinity());
    }
    return es;
}

double condition_from(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

void check_spd(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
               const std::string& context) {
    const double cond = condition_from(es);
    if (!(cond < kMaxCondition)) {
        std::ostringstream msg;
        msg << context << ": matrix is singular or ill-conditioned (condition number "
            << cond << " exceeds " << kMaxCondition << ")";
        throw SingularMatrixError(msg.str(), cond);
    }
}

}  // namespace

double spd_condition(const Eigen::MatrixXd& a) {
    return condition_from(decompose(a, "spd_condition"));
}

Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const std::string& context) {
    if (a.rows() != b.rows()) {
        throw DomainError(context + ": dimension mismatch in solve");
    }
    auto es = decompose(a, context);
    check_spd(es, context);
    return es.eigenvectors() *
           es.eigenvalues().cwiseInverse().asDiagonal() *
           (es.eigenvectors().transpose() * b);
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& context) {
    auto es = decompose(a, context);
    check_spd(es, context);
    return es.eigenvectors() *
           es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

void compensated_add(Eigen::MatrixXd& sum, Eigen::MatrixXd& comp,
                     const Eigen::MatrixXd& term) {
    for (Eigen::Index j = 0; j < sum.cols(); ++j) {
        for (Eigen::Index i = 0; i < sum.rows(); ++i) {
            const double t = term(i, j);
            const double s = sum(i, j);
            const double total = s + t;
            // Neumaier's variant: accumulate the rounding error of each add.
            if (std::abs(s) >= std::abs(t)) {
                comp(i, j) += (s - total) + t;
            } else {
                comp(i, j) += (t - total) + s;
            }
            sum(i, j) = total;
        }
    }
}

void finish_compensated(Eigen::MatrixXd& sum, const Eigen::MatrixXd& comp) {
    sum += comp;
}

}  // namespace dimpim
