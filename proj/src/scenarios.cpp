#include "dimpim/scenarios.hpp"

#include <cmath>
#include <sstream>

#include "dimpim/chisq.hpp"
#include "dimpim/errors.hpp"
#include "dimpim/parallel.hpp"

namespace dimpim {

namespace {

void require_interaction_family(Family fit, const char* where) {
    if (fit == Family::Additive) {
        throw DomainError(std::string(where) +
                          ": the additive family has no interaction parameter to test");
    }
}

// Shared curve evaluator: noncentrality is quadratic in the drift scale, so
// evaluate the unit-scale quadratic form once and scale.  Using the same
// arithmetic here for direct curves and grid sweeps keeps them bit-identical.
std::vector<PowerPoint> curve_from_moments(const Eigen::MatrixXd& info_fit,
                                           const Eigen::MatrixXd& dtheta_domega,
                                           const ConstraintSpec& cs,
                                           const Eigen::VectorXd& eta, double alpha,
                                           const std::vector<double>& delta_grid) {
    const double unit_quad = noncentrality(Direction{eta, 1.0}, cs, info_fit, dtheta_domega);
    std::vector<PowerPoint> out;
    out.reserve(delta_grid.size());
    for (const double d : delta_grid) {
        const double nc = d * d * unit_quad;
        out.push_back(PowerPoint{d, asymptotic_power(nc, cs.r(), alpha)});
    }
    return out;
}

void check_delta_grid(const std::vector<double>& grid, const char* where) {
    if (grid.empty()) throw DomainError(std::string(where) + ": delta grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) {
            throw DomainError(std::string(where) + ": delta grid contains a non-finite value");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw DomainError(std::string(where) + ": delta grid must be strictly increasing");
        }
    }
}

}  // namespace

long round_half_away(double v) {
    return static_cast<long>(v < 0.0 ? std::ceil(v - 0.5) : std::floor(v + 0.5));
}

void PrimaryFactors::validate() const {
    if (!(f1 > 0.0 && f1 <= 1.0)) {
        throw DomainError("factor f1 (active fraction) must lie in (0, 1]");
    }
    if (!(f2 >= 0.0 && f2 <= 1.0)) {
        throw DomainError("factor f2 (positive fraction) must lie in [0, 1]");
    }
    if (!(f3 > 0.0) || !std::isfinite(f3)) {
        throw DomainError("factor f3 (magnitude ratio) must be positive and finite");
    }
}

Eigen::VectorXd build_eta_from_factors(int p, const PrimaryFactors& factors) {
    factors.validate();
    if (p < 2) throw DomainError("build_eta_from_factors: need p >= 2 for interactions");
    const long m = static_cast<long>(p) * (p - 1) / 2;
    const long k = round_half_away(factors.f1 * static_cast<double>(m));
    if (k < 1) {
        std::ostringstream msg;
        msg << "build_eta_from_factors: f1 = " << factors.f1 << " with " << m
            << " pairs rounds to zero active entries";
        throw DomainError(msg.str());
    }
    const long k_plus = round_half_away(factors.f2 * static_cast<double>(k));

    const double norm2 = static_cast<double>(k_plus) * factors.f3 * factors.f3 +
                         static_cast<double>(k - k_plus);
    const double c = 1.0 / std::sqrt(norm2);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
    for (long i = 0; i < k_plus; ++i) eta[m - k + i] = factors.f3 * c;
    for (long i = k_plus; i < k; ++i) eta[m - k + i] = -c;
    return eta;
}

Eigen::VectorXd dim_direction(int p) {
    const ParamIndexMap map(Family::Dim, p);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(map.flat_dim());
    eta[map.lambda_index()] = 1.0;
    return eta;
}

Eigen::VectorXd pim_direction(int p, const Eigen::VectorXd& eta_gamma) {
    const ParamIndexMap map(Family::Pim, p);
    if (eta_gamma.size() != map.n_pairs()) {
        throw DomainError("pim_direction: eta_gamma length must be p(p-1)/2");
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(map.flat_dim());
    eta.segment(1 + p, map.n_pairs()) = eta_gamma;
    return eta;
}

ConstraintSpec build_constraint(Family fit, int p) {
    require_interaction_family(fit, "build_constraint");
    if (p < 2) throw DomainError("build_constraint: need p >= 2 for interactions");
    const ParamIndexMap map(fit, p);
    ConstraintSpec cs;
    if (fit == Family::Dim) {
        cs.c = Eigen::MatrixXd::Zero(1, map.flat_dim());
        cs.c(0, map.lambda_index()) = 1.0;
        cs.zeta0 = Eigen::VectorXd::Constant(1, 1.0);
    } else {
        const int m = map.n_pairs();
        cs.c = Eigen::MatrixXd::Zero(m, map.flat_dim());
        for (int k = 0; k < m; ++k) cs.c(k, 1 + p + k) = 1.0;
        cs.zeta0 = Eigen::VectorXd::Zero(m);
    }
    cs.validate();
    return cs;
}

void PowerScenario::validate() const {
    params.validate();
    if (params.p() < 2) throw DomainError("PowerScenario: need p >= 2 for interactions");
    if (dist.dim() != params.p()) {
        throw DomainError("PowerScenario: covariate distribution dimension does not match p");
    }
    require_interaction_family(truth, "PowerScenario");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("PowerScenario: alpha must lie in (0, 1)");
    }
    check_delta_grid(delta_grid, "PowerScenario");
    const ParamIndexMap map(truth, params.p());
    if (eta.size() != map.flat_dim()) {
        std::ostringstream msg;
        msg << "PowerScenario: eta has length " << eta.size() << " but the " << to_string(truth)
            << " family with p = " << params.p() << " has " << map.flat_dim() << " parameters";
        throw DomainError(msg.str());
    }
    Direction{eta, 1.0}.validate();
}

std::vector<double> make_delta_grid(double lo, double hi, int steps) {
    if (steps < 1) throw DomainError("make_delta_grid: need at least one grid point");
    if (steps == 1) {
        if (lo != hi) throw DomainError("make_delta_grid: single-point grid needs lo == hi");
        return {lo};
    }
    if (!(hi > lo)) throw DomainError("make_delta_grid: need hi > lo");
    std::vector<double> grid(static_cast<std::size_t>(steps));
    const double step = (hi - lo) / (steps - 1);
    for (int i = 0; i < steps; ++i) grid[static_cast<std::size_t>(i)] = lo + i * step;
    return grid;
}

MomentSet compute_moments(Family fit, Family truth, const AdditiveParams& params,
                          const CovariateDistribution& dist) {
    MomentSet ms;
    ms.fit = fit;
    ms.truth = truth;
    ms.info_fit = fisher_information(fit, params, dist);
    if (truth == fit) {
        ms.info_truth = ms.info_fit;
        ms.cross = ms.info_fit;
    } else {
        ms.info_truth = fisher_information(truth, params, dist);
        ms.cross = cross_moment(fit, truth, params, dist);
    }
    return ms;
}

std::vector<PowerPoint> power_curve(const PowerScenario& scenario, Family fit) {
    scenario.validate();
    require_interaction_family(fit, "power_curve");
    const int p = scenario.params.p();
    try {
        const ConstraintSpec cs = build_constraint(fit, p);
        const Eigen::MatrixXd info_fit =
            fisher_information(fit, scenario.params, scenario.dist);
        Eigen::MatrixXd dtheta;
        if (fit == scenario.truth) {
            dtheta = Eigen::MatrixXd::Identity(info_fit.rows(), info_fit.rows());
        } else {
            const Eigen::MatrixXd cross =
                cross_moment(fit, scenario.truth, scenario.params, scenario.dist);
            dtheta = kl_projection_derivative(info_fit, cross);
        }
        return curve_from_moments(info_fit, dtheta, cs, scenario.eta, scenario.alpha,
                                  scenario.delta_grid);
    } catch (const SingularMatrixError& e) {
        std::ostringstream msg;
        msg << "power_curve [fit = " << to_string(fit) << ", truth = "
            << to_string(scenario.truth) << ", p = " << p << "]: " << e.what();
        throw SingularMatrixError(msg.str(), e.condition_number);
    }
}

std::vector<GridCell> factor_grid_sweep(const CovariateDistribution& dist,
                                        const AdditiveParams& params, double alpha,
                                        const std::vector<double>& delta_grid,
                                        const std::vector<double>& f1_levels,
                                        const std::vector<double>& f2_levels,
                                        const std::vector<double>& f3_levels,
                                        int threads) {
    params.validate();
    const int p = params.p();
    if (p < 2) throw DomainError("factor_grid_sweep: need p >= 2 for interactions");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("factor_grid_sweep: alpha must lie in (0, 1)");
    }
    check_delta_grid(delta_grid, "factor_grid_sweep");
    if (f1_levels.empty() || f2_levels.empty() || f3_levels.empty()) {
        throw DomainError("factor_grid_sweep: every factor needs at least one level");
    }

    // All cells share the same null point, so the moment matrices (the
    // expensive part; support size 2^p) are computed exactly once.
    Eigen::MatrixXd info_dim, info_pim, dtheta_dim, dtheta_pim;
    try {
        info_dim = fisher_information(Family::Dim, params, dist);
        info_pim = fisher_information(Family::Pim, params, dist);
        const Eigen::MatrixXd cross_dp = cross_moment(Family::Dim, Family::Pim, params, dist);
        dtheta_dim = kl_projection_derivative(info_dim, cross_dp);
        dtheta_pim = Eigen::MatrixXd::Identity(info_pim.rows(), info_pim.rows());
    } catch (const SingularMatrixError& e) {
        std::ostringstream msg;
        msg << "factor_grid_sweep [p = " << p << "]: " << e.what();
        throw SingularMatrixError(msg.str(), e.condition_number);
    }
    const ConstraintSpec cs_dim = build_constraint(Family::Dim, p);
    const ConstraintSpec cs_pim = build_constraint(Family::Pim, p);

    std::vector<PrimaryFactors> cells;
    for (const double f1 : f1_levels) {
        for (const double f2 : f2_levels) {
            for (const double f3 : f3_levels) {
                cells.push_back(PrimaryFactors{f1, f2, f3});
            }
        }
    }

    std::vector<GridCell> out(cells.size());
    parallel_for(static_cast<int>(cells.size()), threads, [&](int i) {
        const PrimaryFactors& f = cells[static_cast<std::size_t>(i)];
        try {
            const Eigen::VectorXd eta = pim_direction(p, build_eta_from_factors(p, f));
            GridCell cell;
            cell.factors = f;
            cell.dim_fit =
                curve_from_moments(info_dim, dtheta_dim, cs_dim, eta, alpha, delta_grid);
            cell.pim_fit =
                curve_from_moments(info_pim, dtheta_pim, cs_pim, eta, alpha, delta_grid);
            out[static_cast<std::size_t>(i)] = std::move(cell);
        } catch (const SingularMatrixError& e) {
            std::ostringstream msg;
            msg << "factor_grid_sweep [f1 = " << f.f1 << ", f2 = " << f.f2
                << ", f3 = " << f.f3 << "]: " << e.what();
            throw SingularMatrixError(msg.str(), e.condition_number);
        }
    });
    return out;
}

}  // namespace dimpim
