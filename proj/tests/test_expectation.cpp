#include <cmath>
#include <vector>

#include <doctest.h>
#include <Eigen/Dense>

#include "dimpim/errors.hpp"
#include "dimpim/expectation.hpp"
#include "dimpim/models.hpp"
#include "dimpim/rng.hpp"
#include "oracles.hpp"

using dimpim::AdditiveParams;
using dimpim::CovariateDistribution;
using dimpim::Family;
using dimpim::ParamIndexMap;
using dimpim::SupportPoint;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

AdditiveParams make_null(int p, double beta = 0.5, double beta0 = 0.0, double sigma2 = 1.0) {
    AdditiveParams out;
    out.beta0 = beta0;
    out.beta = VectorXd::Constant(p, beta);
    out.sigma2 = sigma2;
    return out;
}

const std::vector<Family> kFamilies{Family::Additive, Family::Dim, Family::Pim};

}  // namespace

TEST_SUITE("expectation") {

TEST_CASE("a single Bernoulli component enumerates to its two points") {
    const auto dist = CovariateDistribution::product_bernoulli(1, 0.5);
    const auto pts = dist.enumerate_support();
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].x[0] == 0.0);
    CHECK(pts[0].prob == 0.5);
    CHECK(pts[1].x[0] == 1.0);
    CHECK(pts[1].prob == 0.5);
}

TEST_CASE("support enumeration counts in binary with the first covariate fastest") {
    const auto dist = CovariateDistribution::product_bernoulli(2, 0.5);
    const auto pts = dist.enumerate_support();
    REQUIRE(pts.size() == 4);
    const double expect[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int i = 0; i < 4; ++i) {
        CHECK(pts[i].x[0] == expect[i][0]);
        CHECK(pts[i].x[1] == expect[i][1]);
    }
}

TEST_CASE("nine symmetric components give 512 equiprobable points") {
    const auto dist = CovariateDistribution::product_bernoulli(9, 0.5);
    const auto pts = dist.enumerate_support();
    REQUIRE(pts.size() == 512);
    double total = 0.0;
    for (const auto& pt : pts) {
        CHECK(pt.prob == doctest::Approx(1.0 / 512.0).epsilon(1e-14));
        total += pt.prob;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("asymmetric success probabilities multiply across components") {
    VectorXd q(2);
    q << 0.3, 0.7;
    const auto pts = CovariateDistribution::product_bernoulli(q).enumerate_support();
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].prob == doctest::Approx(0.7 * 0.3).epsilon(1e-14));  // (0,0)
    CHECK(pts[1].prob == doctest::Approx(0.3 * 0.3).epsilon(1e-14));  // (1,0)
    CHECK(pts[2].prob == doctest::Approx(0.7 * 0.7).epsilon(1e-14));  // (0,1)
    CHECK(pts[3].prob == doctest::Approx(0.3 * 0.7).epsilon(1e-14));  // (1,1)
}

TEST_CASE("explicit supports are echoed unchanged") {
    std::vector<SupportPoint> pts(2);
    pts[0].x = VectorXd::Zero(1);
    pts[0].prob = 0.3;
    pts[1].x = VectorXd::Ones(1);
    pts[1].prob = 0.7;
    const auto echoed = CovariateDistribution::explicit_discrete(pts).enumerate_support();
    REQUIRE(echoed.size() == 2);
    CHECK(echoed[0].prob == 0.3);
    CHECK(echoed[1].prob == 0.7);
    CHECK(echoed[0].x[0] == 0.0);
    CHECK(echoed[1].x[0] == 1.0);
}

TEST_CASE("invalid distributions are rejected") {
    CHECK_THROWS_AS(CovariateDistribution::product_bernoulli(2, 0.0), dimpim::DomainError);
    CHECK_THROWS_AS(CovariateDistribution::product_bernoulli(2, 1.0), dimpim::DomainError);
    CHECK_THROWS_AS(CovariateDistribution::product_bernoulli(0, 0.5), dimpim::DomainError);

    std::vector<SupportPoint> bad(2);
    bad[0].x = VectorXd::Zero(1);
    bad[0].prob = 0.6;
    bad[1].x = VectorXd::Ones(1);
    bad[1].prob = 0.6;
    CHECK_THROWS_AS(CovariateDistribution::explicit_discrete(bad), dimpim::DomainError);

    // Enumeration caps at 2^24 points and refuses pure samplers.
    CHECK_THROWS_AS(CovariateDistribution::product_bernoulli(25, 0.5).enumerate_support(),
                    dimpim::DomainError);
    const auto sampler = CovariateDistribution::sampleable(
        1, [](dimpim::Rng& rng) { return VectorXd::Constant(1, rng.uniform01()); });
    CHECK_THROWS_AS(sampler.enumerate_support(), dimpim::DomainError);
    CHECK_FALSE(sampler.enumerable());
}

TEST_CASE("sampling frequencies match the Bernoulli law") {
    const auto dist = CovariateDistribution::product_bernoulli(2, 0.3);
    dimpim::Rng rng(99);
    const int n = 200000;
    double sum0 = 0.0, sum1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const VectorXd x = dist.sample(rng);
        sum0 += x[0];
        sum1 += x[1];
    }
    const double se = std::sqrt(0.3 * 0.7 / n);
    CHECK(std::abs(sum0 / n - 0.3) < 5.0 * se);
    CHECK(std::abs(sum1 / n - 0.3) < 5.0 * se);
}

TEST_CASE("additive information on one covariate by hand") {
    const auto dist = CovariateDistribution::product_bernoulli(1, 0.5);
    const MatrixXd info = dimpim::fisher_information(Family::Additive, make_null(1), dist);
    MatrixXd expect(3, 3);
    expect << 1.0, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.5;
    CHECK((info - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("closed-form moments equal the naive support sum for every family pair") {
    const AdditiveParams theta = make_null(3, 0.5, 0.2, 1.3);
    const auto dist = CovariateDistribution::product_bernoulli(3, 0.5);
    for (Family f : kFamilies) {
        for (Family g : kFamilies) {
            const MatrixXd lib = dimpim::cross_moment(f, g, theta, dist);
            const MatrixXd ref = oracles::naive_cross_moment(f, g, theta, dist);
            REQUIRE(lib.rows() == ref.rows());
            REQUIRE(lib.cols() == ref.cols());
            CHECK((lib - ref).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("swapping the family pair transposes the cross moment") {
    const AdditiveParams theta = make_null(3);
    const auto dist = CovariateDistribution::product_bernoulli(3, 0.5);
    const MatrixXd dp = dimpim::cross_moment(Family::Dim, Family::Pim, theta, dist);
    const MatrixXd pd = dimpim::cross_moment(Family::Pim, Family::Dim, theta, dist);
    CHECK((dp - pd.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("information matrices are symmetric with nonnegative spectra") {
    const AdditiveParams theta = make_null(4, 0.5, 0.0, 0.8);
    const auto dist = CovariateDistribution::product_bernoulli(4, 0.4);
    for (Family f : kFamilies) {
        const MatrixXd info = dimpim::fisher_information(f, theta, dist);
        CHECK((info - info.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(info);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
        const MatrixXd cross = dimpim::cross_moment(f, f, theta, dist);
        CHECK((info - cross).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("the additive information embeds in both interaction families") {
    const AdditiveParams theta = make_null(3, 0.5, 0.1, 1.0);
    const auto dist = CovariateDistribution::product_bernoulli(3, 0.5);
    const MatrixXd add = dimpim::fisher_information(Family::Additive, theta, dist);
    const MatrixXd dim = dimpim::fisher_information(Family::Dim, theta, dist);
    const MatrixXd pim = dimpim::fisher_information(Family::Pim, theta, dist);

    const ParamIndexMap add_map(Family::Additive, 3);
    // Shared coordinates: beta0, beta, sigma2 (in each family's own layout).
    const auto embed = [&](const MatrixXd& big, const ParamIndexMap& map) {
        std::vector<int> idx;
        idx.push_back(map.beta0_index());
        for (int i = 0; i < 3; ++i) idx.push_back(map.beta_index(i));
        idx.push_back(map.sigma2_index());
        MatrixXd sub(idx.size(), idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            for (std::size_t c = 0; c < idx.size(); ++c) {
                sub(r, c) = big(idx[r], idx[c]);
            }
        }
        return sub;
    };
    CHECK((embed(dim, ParamIndexMap(Family::Dim, 3)) - add).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((embed(pim, ParamIndexMap(Family::Pim, 3)) - add).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(add_map.flat_dim() == add.rows());
}

TEST_CASE("scaling the error variance rescales the blocks as advertised") {
    const auto dist = CovariateDistribution::product_bernoulli(3, 0.5);
    const MatrixXd base = dimpim::fisher_information(Family::Dim, make_null(3), dist);
    const double c = 2.5;
    const MatrixXd scaled =
        dimpim::fisher_information(Family::Dim, make_null(3, 0.5, 0.0, c), dist);
    const int d = static_cast<int>(base.rows());
    CHECK((scaled.topLeftCorner(d - 1, d - 1) * c - base.topLeftCorner(d - 1, d - 1))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(scaled(d - 1, d - 1) == doctest::Approx(base(d - 1, d - 1) / (c * c)).epsilon(1e-12));
}

TEST_CASE("blocked accumulation does not depend on the block size") {
    const AdditiveParams theta = make_null(5, 0.5, 0.0, 1.0);
    const auto dist = CovariateDistribution::product_bernoulli(5, 0.35);
    MatrixXd x_cols;
    VectorXd prob;
    dist.support_matrix(x_cols, prob);
    const MatrixXd ref = dimpim::detail::weighted_gradient_cross_sum(
        Family::Dim, Family::Pim, theta, x_cols, prob, 4096);
    for (int block : {1, 3, 7, 16, 512, 8192}) {
        const MatrixXd alt = dimpim::detail::weighted_gradient_cross_sum(
            Family::Dim, Family::Pim, theta, x_cols, prob, block);
        CHECK((alt - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("sampled moments are reproducible and nearly exact at large draw counts") {
    const AdditiveParams theta = make_null(3, 0.5, 0.0, 1.0);
    const auto exact_dist = CovariateDistribution::product_bernoulli(3, 0.5);
    const auto sampled_dist = CovariateDistribution::sampleable(3, [](dimpim::Rng& rng) {
        VectorXd x(3);
        for (int i = 0; i < 3; ++i) x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        return x;
    });

    const MatrixXd a =
        dimpim::mc_cross_moment(Family::Dim, Family::Pim, theta, sampled_dist, 20000, 7);
    const MatrixXd b =
        dimpim::mc_cross_moment(Family::Dim, Family::Pim, theta, sampled_dist, 20000, 7);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // bitwise reproducible

    MatrixXd se;
    const MatrixXd mc = dimpim::mc_cross_moment(Family::Dim, Family::Pim, theta,
                                                sampled_dist, 200000, 12345, &se);
    const MatrixXd exact = dimpim::cross_moment(Family::Dim, Family::Pim, theta, exact_dist);
    const MatrixXd tol = 3.0 * se.array().max(1e-12).matrix();
    CHECK(((mc - exact).cwiseAbs() - tol).maxCoeff() < 0.0);
}

TEST_CASE("a single sampled point gives a rank-two moment matrix") {
    const AdditiveParams theta = make_null(2, 0.5, 0.0, 1.0);
    const auto dist = CovariateDistribution::sampleable(2, [](dimpim::Rng&) {
        VectorXd x(2);
        x << 1.0, 1.0;
        return x;
    });
    const MatrixXd m = dimpim::mc_cross_moment(Family::Pim, Family::Pim, theta, dist, 1, 3);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    int nonzero = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        if (std::abs(es.eigenvalues()[i]) > 1e-12) ++nonzero;
    }
    CHECK(nonzero <= 2);  // one mean-gradient outer product plus the variance entry
}

TEST_CASE("exact moments refuse distributions that cannot be enumerated") {
    const auto sampler = CovariateDistribution::sampleable(
        2, [](dimpim::Rng& rng) { return VectorXd::Constant(2, rng.uniform01()); });
    try {
        dimpim::cross_moment(Family::Dim, Family::Pim, make_null(2), sampler);
        FAIL("expected a domain error");
    } catch (const dimpim::DomainError& e) {
        CHECK(std::string(e.what()).find("mc_cross_moment") != std::string::npos);
    }
}

TEST_CASE("information at off-null parameter points matches finite-difference scores") {
    // The expected information at a general point theta is
    // E_X[g g^T]/sigma2 for the mean block plus the variance corner; verify
    // against a naive per-point loop built on the general gradients.
    const auto dist = CovariateDistribution::product_bernoulli(3, 0.5);

    dimpim::DimParams dim{make_null(3, 0.5, 0.1, 1.2), 1.35};
    const MatrixXd lib_dim = dimpim::fisher_information_at(dim, dist);
    MatrixXd ref = MatrixXd::Zero(6, 6);
    for (const auto& pt : dist.enumerate_support()) {
        const VectorXd g = dimpim::dim_mean_gradient(dim, pt.x);
        ref.topLeftCorner(5, 5) += (pt.prob / dim.base.sigma2) * g * g.transpose();
    }
    ref(5, 5) = 1.0 / (2.0 * dim.base.sigma2 * dim.base.sigma2);
    CHECK((lib_dim - ref).cwiseAbs().maxCoeff() < 1e-13);

    dimpim::PimParams pim;
    pim.base = make_null(3, 0.5, 0.1, 0.9);
    pim.gamma = VectorXd::Constant(3, 0.2);
    const MatrixXd lib_pim = dimpim::fisher_information_at(pim, dist);
    // The pairwise family's mean gradient is parameter-free, so the
    // off-null information equals the null information at the same variance.
    const MatrixXd null_info =
        dimpim::fisher_information(Family::Pim, pim.base, dist);
    CHECK((lib_pim - null_info).cwiseAbs().maxCoeff() < 1e-13);
}

}  // TEST_SUITE
