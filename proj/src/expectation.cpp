#include "dimpim/expectation.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "dimpim/errors.hpp"
#include "dimpim/linalg.hpp"

namespace dimpim {

namespace {

constexpr int kMaxEnumerableP = 24;

void check_dist_dim(const AdditiveParams& theta, const CovariateDistribution& dist,
                    const char* where) {
    if (dist.dim() != theta.p()) {
        std::ostringstream msg;
        msg << where << ": distribution has dimension " << dist.dim()
            << " but the model has p = " << theta.p();
        throw DomainError(msg.str());
    }
}

void require_enumerable(const CovariateDistribution& dist, const char* where) {
    if (!dist.enumerable()) {
        throw DomainError(std::string(where) +
                          ": distribution is sample-only; use mc_cross_moment for "
                          "Monte Carlo expectations");
    }
}

// Blocked, compensated accumulation of sum_k w_k f(x_k) g(x_k)^T.  Block
// boundaries are fixed by block_size alone, so the result is independent of
// any outer work partitioning.
template <typename FillF, typename FillG>
Eigen::MatrixXd blocked_cross_sum(int dim_f, int dim_g, bool same_family,
                                  FillF&& fill_f, FillG&& fill_g,
                                  const Eigen::MatrixXd& x_cols,
                                  const Eigen::VectorXd& prob, int block_size) {
    if (block_size < 1) throw DomainError("blocked_cross_sum: block size must be >= 1");
    const Eigen::Index n = x_cols.cols();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim_f, dim_g);
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(dim_f, dim_g);
    Eigen::MatrixXd buf_f(dim_f, std::min<Eigen::Index>(block_size, n));
    Eigen::MatrixXd buf_g;
    if (!same_family) buf_g.resize(dim_g, buf_f.cols());

    for (Eigen::Index start = 0; start < n; start += block_size) {
        const Eigen::Index nb = std::min<Eigen::Index>(block_size, n - start);
        for (Eigen::Index c = 0; c < nb; ++c) {
            fill_f(x_cols.col(start + c), buf_f.col(c));
        }
        const auto w = prob.segment(start, nb);
        Eigen::MatrixXd part;
        if (same_family) {
            part.noalias() = (buf_f.leftCols(nb) * w.asDiagonal()) *
                             buf_f.leftCols(nb).transpose();
        } else {
            for (Eigen::Index c = 0; c < nb; ++c) {
                fill_g(x_cols.col(start + c), buf_g.col(c));
            }
            part.noalias() = (buf_f.leftCols(nb) * w.asDiagonal()) *
                             buf_g.leftCols(nb).transpose();
        }
        compensated_add(sum, comp, part);
    }
    finish_compensated(sum, comp);
    return sum;
}

// Wrap the flat-layout mean block and the analytic sigma2 entry into the full
// cross-moment matrix.
Eigen::MatrixXd assemble_cross_moment(const ParamIndexMap& map_f, const ParamIndexMap& map_g,
                                      const Eigen::MatrixXd& mean_cross_sum, double sigma2) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(map_f.flat_dim(), map_g.flat_dim());
    out.topLeftCorner(map_f.mean_dim(), map_g.mean_dim()) = mean_cross_sum / sigma2;
    out(map_f.sigma2_index(), map_g.sigma2_index()) = 1.0 / (2.0 * sigma2 * sigma2);
    return out;
}

}  // namespace

CovariateDistribution CovariateDistribution::product_bernoulli(const Eigen::VectorXd& q) {
    if (q.size() < 1) throw DomainError("product_bernoulli: need at least one component");
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (!(q[i] > 0.0 && q[i] < 1.0)) {
            std::ostringstream msg;
            msg << "product_bernoulli: q_" << (i + 1) << " = " << q[i]
                << " must lie strictly in (0, 1)";
            throw DomainError(msg.str());
        }
    }
    CovariateDistribution d;
    d.kind_ = Kind::ProductBernoulli;
    d.dim_ = static_cast<int>(q.size());
    d.q_ = q;
    return d;
}

CovariateDistribution CovariateDistribution::product_bernoulli(int p, double q) {
    if (p < 1) throw DomainError("product_bernoulli: p must be >= 1");
    return product_bernoulli(Eigen::VectorXd::Constant(p, q));
}

CovariateDistribution CovariateDistribution::explicit_discrete(std::vector<SupportPoint> points) {
    if (points.empty()) throw DomainError("explicit_discrete: support must be nonempty");
    const Eigen::Index dim = points.front().x.size();
    double total = 0.0;
    for (const auto& pt : points) {
        if (pt.x.size() != dim) {
            throw DomainError("explicit_discrete: support points have mixed dimensions");
        }
        if (!(pt.prob > 0.0)) {
            throw DomainError("explicit_discrete: probabilities must be positive");
        }
        total += pt.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "explicit_discrete: probabilities sum to " << total << ", not 1";
        throw DomainError(msg.str());
    }
    CovariateDistribution d;
    d.kind_ = Kind::ExplicitDiscrete;
    d.dim_ = static_cast<int>(dim);
    d.points_ = std::move(points);
    return d;
}

CovariateDistribution CovariateDistribution::sampleable(
    int dim, std::function<Eigen::VectorXd(Rng&)> sampler) {
    if (dim < 1) throw DomainError("sampleable: dimension must be >= 1");
    if (!sampler) throw DomainError("sampleable: sampler must be callable");
    CovariateDistribution d;
    d.kind_ = Kind::Sampleable;
    d.dim_ = dim;
    d.sampler_ = std::move(sampler);
    return d;
}

std::vector<SupportPoint> CovariateDistribution::enumerate_support() const {
    switch (kind_) {
        case Kind::ProductBernoulli: {
            if (dim_ > kMaxEnumerableP) {
                std::ostringstream msg;
                msg << "enumerate_support: p = " << dim_ << " exceeds the enumeration cap of "
                    << kMaxEnumerableP << " (support size 2^p)";
                throw DomainError(msg.str());
            }
            const std::int64_t n = std::int64_t{1} << dim_;
            std::vector<SupportPoint> pts;
            pts.reserve(static_cast<std::size_t>(n));
            for (std::int64_t code = 0; code < n; ++code) {
                SupportPoint pt;
                pt.x = Eigen::VectorXd::Zero(dim_);
                pt.prob = 1.0;
                for (int i = 0; i < dim_; ++i) {
                    // Binary counting order with x_1 as the least significant bit.
                    const bool on = (code >> i) & 1;
                    pt.x[i] = on ? 1.0 : 0.0;
                    pt.prob *= on ? q_[i] : 1.0 - q_[i];
                }
                pts.push_back(std::move(pt));
            }
            return pts;
        }
        case Kind::ExplicitDiscrete:
            return points_;
        case Kind::Sampleable:
            throw DomainError("enumerate_support: distribution is sample-only");
    }
    throw DomainError("enumerate_support: unknown distribution kind");
}

void CovariateDistribution::support_matrix(Eigen::MatrixXd& x_cols, Eigen::VectorXd& prob) const {
    const std::vector<SupportPoint> pts = enumerate_support();
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    x_cols.resize(dim_, n);
    prob.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        x_cols.col(k) = pts[static_cast<std::size_t>(k)].x;
        prob[k] = pts[static_cast<std::size_t>(k)].prob;
    }
}

Eigen::VectorXd CovariateDistribution::sample(Rng& rng) const {
    switch (kind_) {
        case Kind::ProductBernoulli: {
            Eigen::VectorXd x(dim_);
            for (int i = 0; i < dim_; ++i) x[i] = rng.bernoulli(q_[i]) ? 1.0 : 0.0;
            return x;
        }
        case Kind::ExplicitDiscrete: {
            double u = rng.uniform01();
            for (const auto& pt : points_) {
                if (u < pt.prob) return pt.x;
                u -= pt.prob;
            }
            return points_.back().x;  // guard against rounding at u ~ 1
        }
        case Kind::Sampleable:
            return sampler_(rng);
    }
    throw DomainError("sample: unknown distribution kind");
}

std::vector<SupportPoint> enumerate_support(const CovariateDistribution& dist) {
    return dist.enumerate_support();
}

namespace detail {

Eigen::MatrixXd weighted_gradient_cross_sum(Family fit_f, Family true_g,
                                            const AdditiveParams& theta,
                                            const Eigen::MatrixXd& x_cols,
                                            const Eigen::VectorXd& prob, int block_size) {
    const ParamIndexMap map_f(fit_f, theta.p());
    const ParamIndexMap map_g(true_g, theta.p());
    auto fill_f = [&](const Eigen::Ref<const Eigen::VectorXd>& x,
                      Eigen::Ref<Eigen::VectorXd> out) {
        mean_gradient_at_null_into(fit_f, theta, x, out);
    };
    auto fill_g = [&](const Eigen::Ref<const Eigen::VectorXd>& x,
                      Eigen::Ref<Eigen::VectorXd> out) {
        mean_gradient_at_null_into(true_g, theta, x, out);
    };
    return blocked_cross_sum(map_f.mean_dim(), map_g.mean_dim(), fit_f == true_g,
                             fill_f, fill_g, x_cols, prob, block_size);
}

}  // namespace detail

Eigen::MatrixXd cross_moment(Family fit_f, Family true_g, const AdditiveParams& theta,
                             const CovariateDistribution& dist) {
    theta.validate();
    check_dist_dim(theta, dist, "cross_moment");
    require_enumerable(dist, "cross_moment");
    Eigen::MatrixXd x_cols;
    Eigen::VectorXd prob;
    dist.support_matrix(x_cols, prob);
    const Eigen::MatrixXd mean_sum =
        detail::weighted_gradient_cross_sum(fit_f, true_g, theta, x_cols, prob);
    return assemble_cross_moment(ParamIndexMap(fit_f, theta.p()),
                                 ParamIndexMap(true_g, theta.p()), mean_sum, theta.sigma2);
}

Eigen::MatrixXd fisher_information(Family f, const AdditiveParams& theta,
                                   const CovariateDistribution& dist) {
    return cross_moment(f, f, theta, dist);
}

Eigen::MatrixXd mc_cross_moment(Family fit_f, Family true_g, const AdditiveParams& theta,
                                const CovariateDistribution& dist, std::int64_t n_samples,
                                std::uint64_t seed, Eigen::MatrixXd* se_out) {
    theta.validate();
    check_dist_dim(theta, dist, "mc_cross_moment");
    if (n_samples < 1) throw DomainError("mc_cross_moment: need at least one sample");

    const ParamIndexMap map_f(fit_f, theta.p());
    const ParamIndexMap map_g(true_g, theta.p());
    const int df = map_f.mean_dim();
    const int dg = map_g.mean_dim();

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(df, dg);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(df, dg);
    Eigen::VectorXd gf(df), gg(dg);
    Rng rng(seed);
    for (std::int64_t k = 0; k < n_samples; ++k) {
        const Eigen::VectorXd x = dist.sample(rng);
        mean_gradient_at_null_into(fit_f, theta, x, gf);
        mean_gradient_at_null_into(true_g, theta, x, gg);
        for (int j = 0; j < dg; ++j) {
            for (int i = 0; i < df; ++i) {
                const double v = gf[i] * gg[j];
                sum(i, j) += v;
                sumsq(i, j) += v * v;
            }
        }
    }

    const double n = static_cast<double>(n_samples);
    const Eigen::MatrixXd mean_sum = sum / n;
    Eigen::MatrixXd out = assemble_cross_moment(map_f, map_g, mean_sum, theta.sigma2);
    if (se_out != nullptr) {
        // Standard error of each Monte Carlo mean entry; the analytic sigma2
        // entries carry no sampling noise.
        se_out->setZero(map_f.flat_dim(), map_g.flat_dim());
        if (n_samples > 1) {
            for (int j = 0; j < dg; ++j) {
                for (int i = 0; i < df; ++i) {
                    const double m = mean_sum(i, j);
                    const double var = std::max(0.0, (sumsq(i, j) - n * m * m) / (n - 1.0));
                    (*se_out)(i, j) = std::sqrt(var / n) / theta.sigma2;
                }
            }
        }
    }
    return out;
}

Eigen::MatrixXd fisher_information_at(const DimParams& theta,
                                      const CovariateDistribution& dist) {
    theta.validate();
    check_dist_dim(theta.base, dist, "fisher_information_at");
    require_enumerable(dist, "fisher_information_at");
    Eigen::MatrixXd x_cols;
    Eigen::VectorXd prob;
    dist.support_matrix(x_cols, prob);
    const ParamIndexMap map(Family::Dim, theta.base.p());
    auto fill = [&](const Eigen::Ref<const Eigen::VectorXd>& x,
                    Eigen::Ref<Eigen::VectorXd> out) {
        dim_mean_gradient_into(theta, x, out);
    };
    const Eigen::MatrixXd mean_sum =
        blocked_cross_sum(map.mean_dim(), map.mean_dim(), true, fill, fill, x_cols, prob, 4096);
    return assemble_cross_moment(map, map, mean_sum, theta.base.sigma2);
}

Eigen::MatrixXd fisher_information_at(const PimParams& theta,
                                      const CovariateDistribution& dist) {
    theta.validate();
    check_dist_dim(theta.base, dist, "fisher_information_at");
    require_enumerable(dist, "fisher_information_at");
    Eigen::MatrixXd x_cols;
    Eigen::VectorXd prob;
    dist.support_matrix(x_cols, prob);
    const ParamIndexMap map(Family::Pim, theta.base.p());
    auto fill = [&](const Eigen::Ref<const Eigen::VectorXd>& x,
                    Eigen::Ref<Eigen::VectorXd> out) {
        pim_mean_gradient_into(theta, x, out);
    };
    const Eigen::MatrixXd mean_sum =
        blocked_cross_sum(map.mean_dim(), map.mean_dim(), true, fill, fill, x_cols, prob, 4096);
    return assemble_cross_moment(map, map, mean_sum, theta.base.sigma2);
}

}  // namespace dimpim
