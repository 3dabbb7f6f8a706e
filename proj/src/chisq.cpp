#include "dimpim/chisq.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dimpim/errors.hpp"

namespace dimpim {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Lower incomplete gamma by its power series; accurate for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw ConvergenceError("regularized_gamma_p: series did not converge");
}

// Upper incomplete gamma by the modified Lentz continued fraction;
// accurate for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw ConvergenceError("regularized_gamma_q: continued fraction did not converge");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw DomainError("regularized_gamma_p: shape must be positive");
    if (x < 0.0) throw DomainError("regularized_gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw DomainError("regularized_gamma_q: shape must be positive");
    if (x < 0.0) throw DomainError("regularized_gamma_q: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chisq_cdf(double x, int r) {
    if (r < 1) throw DomainError("chisq_cdf: degrees of freedom must be >= 1");
    if (x < 0.0) throw DomainError("chisq_cdf: x must be nonnegative");
    return regularized_gamma_p(0.5 * r, 0.5 * x);
}

double chisq_sf(double x, int r) {
    if (r < 1) throw DomainError("chisq_sf: degrees of freedom must be >= 1");
    if (x < 0.0) throw DomainError("chisq_sf: x must be nonnegative");
    return regularized_gamma_q(0.5 * r, 0.5 * x);
}

double chisq_quantile(int r, double alpha) {
    if (r < 1) throw DomainError("chisq_quantile: degrees of freedom must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("chisq_quantile: alpha must lie in (0, 1)");
    }
    // Bracket the root of sf(x) = alpha, then bisect; sf is strictly
    // decreasing so this is unconditionally stable.
    double lo = 0.0;
    double hi = r + 10.0 * std::sqrt(2.0 * r) + 10.0;
    while (chisq_sf(hi, r) > alpha) {
        hi *= 2.0;
        if (hi > 1e300) throw ConvergenceError("chisq_quantile: bracketing failed");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + lo); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chisq_sf(mid, r) > alpha) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double noncentral_chisq_sf(double x, int r, double delta) {
    if (r < 1) throw DomainError("noncentral_chisq_sf: degrees of freedom must be >= 1");
    if (x < 0.0) throw DomainError("noncentral_chisq_sf: x must be nonnegative");
    if (delta < 0.0) throw DomainError("noncentral_chisq_sf: noncentrality must be nonnegative");
    if (delta == 0.0) return chisq_sf(x, r);

    const double lam = 0.5 * delta;
    const long k0 = static_cast<long>(std::floor(lam));
    const double log_w0 = k0 * std::log(lam) - lam - std::lgamma(k0 + 1.0);

    // Walk Poisson weights outward from the mode k0, accumulating
    // w_k * P(chisq_{r + 2k} > x) until the residual weight is negligible.
    constexpr double kResidual = 1e-12;
    constexpr long kTermCap = 200000;
    double total_weight = 0.0;
    double sum = 0.0;

    double w_up = std::exp(log_w0);  // weight of the next term above the mode
    long k_up = k0;
    long k_down = k0 - 1;
    double w_down = (k_down >= 0) ? w_up * (k0 / lam) : 0.0;

    for (long step = 0; step < kTermCap; ++step) {
        sum += w_up * chisq_sf(x, r + 2 * static_cast<int>(k_up));
        total_weight += w_up;
        w_up *= lam / (k_up + 1.0);
        ++k_up;
        if (k_down >= 0) {
            sum += w_down * chisq_sf(x, r + 2 * static_cast<int>(k_down));
            total_weight += w_down;
            if (k_down > 0) w_down *= k_down / lam;
            --k_down;
        }
        if (1.0 - total_weight < kResidual) {
            return sum < 1.0 ? sum : 1.0;
        }
    }
    throw ConvergenceError("noncentral_chisq_sf: mixture series did not converge");
}

double asymptotic_power(double delta, int r, double alpha) {
    const double crit = chisq_quantile(r, alpha);
    return noncentral_chisq_sf(crit, r, delta);
}

}  // namespace dimpim
