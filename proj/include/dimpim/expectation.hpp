#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "dimpim/models.hpp"
#include "dimpim/rng.hpp"

namespace dimpim {

struct SupportPoint {
    Eigen::VectorXd x;
    double prob;
};

// Covariate distribution: either a finite support that can be enumerated
// exactly (product Bernoulli, explicit point list) or a black-box sampler
// usable only for Monte Carlo expectation.
class CovariateDistribution {
  public:
    // Independent Bernoulli components; q[i] = P(x_i = 1), each in (0, 1).
    static CovariateDistribution product_bernoulli(const Eigen::VectorXd& q);
    static CovariateDistribution product_bernoulli(int p, double q);

    // Arbitrary finite support; probabilities must be positive and sum to 1
    // within 1e-12.
    static CovariateDistribution explicit_discrete(std::vector<SupportPoint> points);

    // Sampling access only; enumeration requests throw.
    static CovariateDistribution sampleable(int dim,
                                            std::function<Eigen::VectorXd(Rng&)> sampler);

    int dim() const { return dim_; }
    bool enumerable() const { return kind_ != Kind::Sampleable; }

    // Full support with probabilities.  For product Bernoulli the 2^p points
    // come in binary counting order with x_1 as the least significant bit,
    // and enumeration is refused for p > 24 (support size would exceed 2^24).
    std::vector<SupportPoint> enumerate_support() const;

    // Support laid out as columns of a p x N matrix plus a weight vector;
    // the cheap form used by the moment accumulators.
    void support_matrix(Eigen::MatrixXd& x_cols, Eigen::VectorXd& prob) const;

    Eigen::VectorXd sample(Rng& rng) const;

  private:
    enum class Kind { ProductBernoulli, ExplicitDiscrete, Sampleable };

    CovariateDistribution() = default;

    Kind kind_ = Kind::ProductBernoulli;
    int dim_ = 0;
    Eigen::VectorXd q_;                              // ProductBernoulli
    std::vector<SupportPoint> points_;               // ExplicitDiscrete
    std::function<Eigen::VectorXd(Rng&)> sampler_;   // Sampleable
};

std::vector<SupportPoint> enumerate_support(const CovariateDistribution& dist);

// Cross-moment matrix C_FG = E[s_F s_G^T] of the two families' scores at the
// shared null point theta, with the expectation over Y|X done analytically:
// the mean-parameter block is (1/sigma2) E_X[g_F g_G^T], the (sigma2, sigma2)
// entry is 1/(2 sigma2^2), and the mean-sigma2 cross entries vanish.
// Requires an enumerable distribution.
Eigen::MatrixXd cross_moment(Family fit_f, Family true_g, const AdditiveParams& theta,
                             const CovariateDistribution& dist);

// Fisher information of one family at the null: cross_moment(f, f, ...).
Eigen::MatrixXd fisher_information(Family f, const AdditiveParams& theta,
                                   const CovariateDistribution& dist);

// Monte Carlo estimate of the same cross-moment from `n_samples` x-draws
// (Y|X still analytic), with an optional entrywise standard-error estimate.
// Deterministic given the seed.  Works for sampleable distributions.
Eigen::MatrixXd mc_cross_moment(Family fit_f, Family true_g, const AdditiveParams& theta,
                                const CovariateDistribution& dist, std::int64_t n_samples,
                                std::uint64_t seed, Eigen::MatrixXd* se_out = nullptr);

// Expected information evaluated at a general (fitted) parameter point,
// under the known covariate distribution.
Eigen::MatrixXd fisher_information_at(const DimParams& theta,
                                      const CovariateDistribution& dist);
Eigen::MatrixXd fisher_information_at(const PimParams& theta,
                                      const CovariateDistribution& dist);

namespace detail {

// E_X-weighted sum of g_F(x) g_G(x)^T over the support, accumulated in fixed
// column blocks so the result does not depend on how work is partitioned.
Eigen::MatrixXd weighted_gradient_cross_sum(Family fit_f, Family true_g,
                                            const AdditiveParams& theta,
                                            const Eigen::MatrixXd& x_cols,
                                            const Eigen::VectorXd& prob,
                                            int block_size = 4096);

}  // namespace detail

}  // namespace dimpim
