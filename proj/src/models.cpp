#include "dimpim/models.hpp"

#include <cmath>
#include <sstream>

#include "dimpim/errors.hpp"

namespace dimpim {

namespace {

// x log x extended continuously by 0 log 0 := 0.
double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw DomainError(std::string(what) + " must be finite");
    }
}

void check_x_dim(const AdditiveParams& theta, const Eigen::VectorXd& x, const char* where) {
    if (x.size() != theta.beta.size()) {
        std::ostringstream msg;
        msg << where << ": covariate vector has length " << x.size()
            << " but the model has p = " << theta.beta.size();
        throw DomainError(msg.str());
    }
}

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::Additive: return "additive";
        case Family::Dim: return "dim";
        case Family::Pim: return "pim";
    }
    throw DomainError("to_string: unknown family");
}

Family family_from_string(const std::string& s) {
    if (s == "additive") return Family::Additive;
    if (s == "dim") return Family::Dim;
    if (s == "pim") return Family::Pim;
    throw DomainError("unknown model family '" + s + "' (expected additive, dim, or pim)");
}

void AdditiveParams::validate() const {
    check_finite(beta0, "beta0");
    check_finite(sigma2, "sigma2");
    if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
    if (beta.size() < 1) throw DomainError("beta must have at least one component");
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        check_finite(beta[i], "beta");
        if (beta[i] < 0.0) {
            std::ostringstream msg;
            msg << "beta_" << (i + 1) << " = " << beta[i] << " is negative";
            throw DomainError(msg.str());
        }
    }
}

void DimParams::validate() const {
    base.validate();
    check_finite(lambda, "lambda");
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
}

void PimParams::validate() const {
    base.validate();
    const Eigen::Index m = static_cast<Eigen::Index>(base.p()) * (base.p() - 1) / 2;
    if (gamma.size() != m) {
        std::ostringstream msg;
        msg << "gamma has length " << gamma.size() << " but p = " << base.p()
            << " requires " << m << " pairwise coefficients";
        throw DomainError(msg.str());
    }
    for (Eigen::Index i = 0; i < gamma.size(); ++i) check_finite(gamma[i], "gamma");
}

ParamIndexMap::ParamIndexMap(Family f, int p_covariates) : family(f), p(p_covariates) {
    if (p < 1) throw DomainError("ParamIndexMap: p must be >= 1");
}

int ParamIndexMap::flat_dim() const {
    switch (family) {
        case Family::Additive: return p + 2;
        case Family::Dim: return p + 3;
        case Family::Pim: return p + n_pairs() + 2;
    }
    throw DomainError("ParamIndexMap: unknown family");
}

int ParamIndexMap::beta_index(int i) const {
    if (i < 0 || i >= p) throw DomainError("ParamIndexMap: beta index out of range");
    return 1 + i;
}

int ParamIndexMap::lambda_index() const {
    if (family != Family::Dim) throw DomainError("ParamIndexMap: lambda only exists for dim");
    return p + 1;
}

int ParamIndexMap::gamma_index(int i, int j) const {
    if (family != Family::Pim) throw DomainError("ParamIndexMap: gamma only exists for pim");
    if (i < 0 || j <= i || j >= p) throw DomainError("ParamIndexMap: gamma pair out of range");
    // Pairs in lexicographic order: (0,1), (0,2), ..., (p-2,p-1).
    const int offset = i * p - i * (i + 1) / 2 + (j - i - 1);
    return 1 + p + offset;
}

std::string ParamIndexMap::name(int k) const {
    if (k < 0 || k >= flat_dim()) throw DomainError("ParamIndexMap: index out of range");
    if (k == 0) return "beta0";
    if (k <= p) return "beta" + std::to_string(k);
    if (k == sigma2_index()) return "sigma2";
    if (family == Family::Dim) return "lambda";
    // Remaining pim indices are pairwise coefficients; invert the lex offset.
    int offset = k - (1 + p);
    for (int i = 0; i < p; ++i) {
        const int row = p - i - 1;
        if (offset < row) {
            return "gamma_" + std::to_string(i + 1) + "_" + std::to_string(i + offset + 2);
        }
        offset -= row;
    }
    throw DomainError("ParamIndexMap: index out of range");
}

Eigen::VectorXd flatten(const AdditiveParams& theta) {
    Eigen::VectorXd v(theta.p() + 2);
    v[0] = theta.beta0;
    v.segment(1, theta.p()) = theta.beta;
    v[theta.p() + 1] = theta.sigma2;
    return v;
}

Eigen::VectorXd flatten(const DimParams& theta) {
    const int p = theta.base.p();
    Eigen::VectorXd v(p + 3);
    v[0] = theta.base.beta0;
    v.segment(1, p) = theta.base.beta;
    v[p + 1] = theta.lambda;
    v[p + 2] = theta.base.sigma2;
    return v;
}

Eigen::VectorXd flatten(const PimParams& theta) {
    const int p = theta.base.p();
    const int m = p * (p - 1) / 2;
    Eigen::VectorXd v(p + m + 2);
    v[0] = theta.base.beta0;
    v.segment(1, p) = theta.base.beta;
    v.segment(1 + p, m) = theta.gamma;
    v[p + m + 1] = theta.base.sigma2;
    return v;
}

DimParams unflatten_dim(const Eigen::VectorXd& v, int p) {
    if (v.size() != p + 3) throw DomainError("unflatten_dim: wrong vector length");
    DimParams theta;
    theta.base.beta0 = v[0];
    theta.base.beta = v.segment(1, p);
    theta.lambda = v[p + 1];
    theta.base.sigma2 = v[p + 2];
    return theta;
}

PimParams unflatten_pim(const Eigen::VectorXd& v, int p) {
    const int m = p * (p - 1) / 2;
    if (v.size() != p + m + 2) throw DomainError("unflatten_pim: wrong vector length");
    PimParams theta;
    theta.base.beta0 = v[0];
    theta.base.beta = v.segment(1, p);
    theta.gamma = v.segment(1 + p, m);
    theta.base.sigma2 = v[p + m + 1];
    return theta;
}

double additive_mean(const AdditiveParams& theta, const Eigen::VectorXd& x) {
    check_x_dim(theta, x, "additive_mean");
    return theta.beta0 + theta.beta.dot(x);
}

double dim_mean(const DimParams& theta, const Eigen::VectorXd& x) {
    check_x_dim(theta.base, x, "dim_mean");
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double t = theta.base.beta[i] * x[i];
        if (t < 0.0) {
            std::ostringstream msg;
            msg << "dim_mean: beta_" << (i + 1) << " * x_" << (i + 1) << " = " << t
                << " is negative; every beta_i x_i must be nonnegative";
            throw DomainError(msg.str());
        }
        if (t > 0.0) total += std::pow(t, theta.lambda);
    }
    if (total <= 0.0) return theta.base.beta0;
    return theta.base.beta0 + std::pow(total, 1.0 / theta.lambda);
}

double pim_mean(const PimParams& theta, const Eigen::VectorXd& x) {
    check_x_dim(theta.base, x, "pim_mean");
    const int p = theta.base.p();
    double mean = theta.base.beta0 + theta.base.beta.dot(x);
    int k = 0;
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            mean += theta.gamma[k++] * x[i] * x[j];
        }
    }
    return mean;
}

Eigen::VectorXd additive_mean_gradient(const AdditiveParams& theta, const Eigen::VectorXd& x) {
    check_x_dim(theta, x, "additive_mean_gradient");
    Eigen::VectorXd g(theta.p() + 1);
    mean_gradient_at_null_into(Family::Additive, theta, x, g);
    return g;
}

Eigen::VectorXd dim_mean_gradient_at_null(const AdditiveParams& theta, const Eigen::VectorXd& x) {
    check_x_dim(theta, x, "dim_mean_gradient_at_null");
    Eigen::VectorXd g(theta.p() + 2);
    mean_gradient_at_null_into(Family::Dim, theta, x, g);
    return g;
}

Eigen::VectorXd pim_mean_gradient_at_null(const AdditiveParams& theta, const Eigen::VectorXd& x) {
    check_x_dim(theta, x, "pim_mean_gradient_at_null");
    Eigen::VectorXd g(theta.p() + theta.p() * (theta.p() - 1) / 2 + 1);
    mean_gradient_at_null_into(Family::Pim, theta, x, g);
    return g;
}

Eigen::VectorXd mean_gradient_at_null(Family f, const AdditiveParams& theta,
                                      const Eigen::VectorXd& x) {
    const ParamIndexMap map(f, theta.p());
    Eigen::VectorXd g(map.mean_dim());
    mean_gradient_at_null_into(f, theta, x, g);
    return g;
}

void mean_gradient_at_null_into(Family f, const AdditiveParams& theta,
                                const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> out) {
    const int p = theta.p();
    out[0] = 1.0;
    for (int i = 0; i < p; ++i) out[1 + i] = x[i];
    switch (f) {
        case Family::Additive:
            break;
        case Family::Dim: {
            // d mu / d lambda at lambda = 1: -S log S + sum_i t_i log t_i.
            double s = 0.0;
            double sum_tlogt = 0.0;
            for (int i = 0; i < p; ++i) {
                const double t = theta.beta[i] * x[i];
                if (t < 0.0) {
                    throw DomainError("dim mean gradient: beta_i x_i must be nonnegative");
                }
                s += t;
                sum_tlogt += xlogx(t);
            }
            out[1 + p] = -xlogx(s) + sum_tlogt;
            break;
        }
        case Family::Pim: {
            int k = 1 + p;
            for (int i = 0; i < p; ++i) {
                for (int j = i + 1; j < p; ++j) {
                    out[k++] = x[i] * x[j];
                }
            }
            break;
        }
    }
}

Eigen::VectorXd dim_mean_gradient(const DimParams& theta, const Eigen::VectorXd& x) {
    check_x_dim(theta.base, x, "dim_mean_gradient");
    Eigen::VectorXd g(theta.base.p() + 2);
    dim_mean_gradient_into(theta, x, g);
    return g;
}

void dim_mean_gradient_into(const DimParams& theta,
                            const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> out) {
    detail::dim_mean_and_gradient(theta, x, out);
}

void pim_mean_gradient_into(const PimParams& theta,
                            const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> out) {
    // The pim mean is linear in its parameters, so the gradient does not
    // depend on theta at all; reuse the null-point formula.
    mean_gradient_at_null_into(Family::Pim, theta.base, x, out);
}

namespace detail {

double dim_mean_and_gradient(const DimParams& theta,
                             const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::VectorXd> grad) {
    const int p = theta.base.p();
    const double lam = theta.lambda;
    double total = 0.0;  // T = sum of (beta_i x_i)^lambda over active terms
    double sum_tlam_logt = 0.0;
    for (int i = 0; i < p; ++i) {
        const double t = theta.base.beta[i] * x[i];
        if (t < 0.0) throw DomainError("dim mean: beta_i x_i must be nonnegative");
        if (t > 0.0) {
            const double tlam = std::pow(t, lam);
            total += tlam;
            sum_tlam_logt += tlam * std::log(t);
        }
    }

    grad[0] = 1.0;
    const double outer = total > 0.0 ? std::pow(total, 1.0 / lam - 1.0) : 0.0;
    for (int i = 0; i < p; ++i) {
        const double t = theta.base.beta[i] * x[i];
        if (x[i] == 0.0) {
            grad[1 + i] = 0.0;
        } else if (t > 0.0) {
            grad[1 + i] = outer * std::pow(t, lam - 1.0) * x[i];
        } else {
            // beta_i = 0 with x_i > 0: one-sided derivative of t^lambda at 0.
            if (lam == 1.0) {
                grad[1 + i] = x[i];
            } else if (lam > 1.0) {
                grad[1 + i] = 0.0;
            } else {
                throw DomainError(
                    "dim mean gradient: derivative in beta_i diverges at beta_i = 0 "
                    "for lambda < 1");
            }
        }
    }
    if (total > 0.0) {
        grad[1 + p] = std::pow(total, 1.0 / lam) *
                      (-std::log(total) / (lam * lam) + sum_tlam_logt / (lam * total));
        return theta.base.beta0 + std::pow(total, 1.0 / lam);
    }
    grad[1 + p] = 0.0;
    return theta.base.beta0;
}

}  // namespace detail

Eigen::VectorXd score_at_null(Family f, const AdditiveParams& theta,
                              const Eigen::VectorXd& x, double y) {
    check_x_dim(theta, x, "score_at_null");
    const ParamIndexMap map(f, theta.p());
    Eigen::VectorXd s(map.flat_dim());
    const double resid = y - additive_mean(theta, x);
    const double s2 = theta.sigma2;
    mean_gradient_at_null_into(f, theta, x, s.head(map.mean_dim()));
    s.head(map.mean_dim()) *= resid / s2;
    s[map.sigma2_index()] = resid * resid / (2.0 * s2 * s2) - 1.0 / (2.0 * s2);
    return s;
}

}  // namespace dimpim
