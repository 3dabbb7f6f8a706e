#pragma once

namespace dimpim {

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
double regularized_gamma_p(double a, double x);

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

// Central chi-square with r degrees of freedom.
double chisq_cdf(double x, int r);
double chisq_sf(double x, int r);

// Upper-alpha critical value: the q with P(X > q) = alpha for X ~ chisq_r.
double chisq_quantile(int r, double alpha);

// Survival function of the noncentral chi-square with r degrees of freedom
// and noncentrality delta: a Poisson(delta/2) mixture of central chi-square
// tails, summed outward from the Poisson mode until the remaining mixture
// weight is below 1e-12.
double noncentral_chisq_sf(double x, int r, double delta);

// Power of a level-alpha chi-square test with r constraints against a local
// alternative with noncentrality delta.
double asymptotic_power(double delta, int r, double alpha);

}  // namespace dimpim
