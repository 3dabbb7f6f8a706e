#pragma once

#include <Eigen/Dense>
#include <string>

namespace dimpim {

// The three mean structures for normal-error regression on p covariates:
//   Additive:  beta0 + sum_i beta_i x_i
//   Dim:       beta0 + ( sum_i (beta_i x_i)^lambda )^(1/lambda)
//   Pim:       beta0 + sum_i beta_i x_i + sum_{i<j} gamma_ij x_i x_j
// Dim reduces to Additive at lambda = 1; Pim reduces at gamma = 0.
enum class Family { Additive, Dim, Pim };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// Shared null-model coordinates (the additive fit with error variance).
struct AdditiveParams {
    double beta0 = 0.0;
    Eigen::VectorXd beta;  // length p, each component >= 0
    double sigma2 = 1.0;

    int p() const { return static_cast<int>(beta.size()); }
    void validate() const;
};

struct DimParams {
    AdditiveParams base;
    double lambda = 1.0;  // > 0
    void validate() const;
};

struct PimParams {
    AdditiveParams base;
    Eigen::VectorXd gamma;  // length p(p-1)/2, pairs (i,j), i < j, in
                            // lexicographic order (1,2), (1,3), ..., (p-1,p)
    void validate() const;
};

// Flat parameter layout used by every vector/matrix in this library.
// Indices are 0-based:
//   Additive: (beta0, beta_1..beta_p, sigma2)                  -> p + 2
//   Dim:      (beta0, beta_1..beta_p, lambda, sigma2)          -> p + 3
//   Pim:      (beta0, beta_1..beta_p, gamma_12..gamma_(p-1)p,
//              sigma2)                                         -> p(p+1)/2 + 2
struct ParamIndexMap {
    Family family;
    int p;

    ParamIndexMap(Family f, int p_covariates);

    int n_pairs() const { return p * (p - 1) / 2; }
    int flat_dim() const;
    int mean_dim() const { return flat_dim() - 1; }  // everything but sigma2

    int beta0_index() const { return 0; }
    int beta_index(int i) const;          // i in [0, p)
    int lambda_index() const;             // Dim only
    int gamma_index(int i, int j) const;  // Pim only, 0-based i < j
    int sigma2_index() const { return flat_dim() - 1; }

    std::string name(int k) const;  // "beta0", "beta3", "lambda", "gamma_1_2", "sigma2"
};

// Flatten / unflatten against the layout above.
Eigen::VectorXd flatten(const AdditiveParams& theta);
Eigen::VectorXd flatten(const DimParams& theta);
Eigen::VectorXd flatten(const PimParams& theta);
DimParams unflatten_dim(const Eigen::VectorXd& v, int p);
PimParams unflatten_pim(const Eigen::VectorXd& v, int p);

// Mean functions.  dim_mean requires every beta_i x_i >= 0; terms with
// beta_i x_i = 0 contribute nothing (and the whole sum collapsing to zero
// leaves just beta0).
double additive_mean(const AdditiveParams& theta, const Eigen::VectorXd& x);
double dim_mean(const DimParams& theta, const Eigen::VectorXd& x);
double pim_mean(const PimParams& theta, const Eigen::VectorXd& x);

// Gradients of the mean in the mean-parameters (flat order, sigma2 excluded),
// evaluated at the shared null point (lambda = 1 / gamma = 0).  The Dim
// lambda-component uses the closed form
//   -S log S + sum_i (beta_i x_i) log(beta_i x_i),  S = sum_i beta_i x_i,
// with 0 log 0 := 0.
Eigen::VectorXd additive_mean_gradient(const AdditiveParams& theta, const Eigen::VectorXd& x);
Eigen::VectorXd dim_mean_gradient_at_null(const AdditiveParams& theta, const Eigen::VectorXd& x);
Eigen::VectorXd pim_mean_gradient_at_null(const AdditiveParams& theta, const Eigen::VectorXd& x);
Eigen::VectorXd mean_gradient_at_null(Family f, const AdditiveParams& theta,
                                      const Eigen::VectorXd& x);

// Allocation-free variants for hot loops; `out` must have mean_dim() entries.
void mean_gradient_at_null_into(Family f, const AdditiveParams& theta,
                                const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> out);

// Gradient of the Dim mean at a general parameter point (mean parameters
// only, flat order).  Needed to evaluate expected information at estimates.
Eigen::VectorXd dim_mean_gradient(const DimParams& theta, const Eigen::VectorXd& x);
void dim_mean_gradient_into(const DimParams& theta,
                            const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> out);
void pim_mean_gradient_into(const PimParams& theta,
                            const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> out);

// Score (gradient of the log density of y given x) at the shared null point,
// in flat order.  Mean components are (y - mu)/sigma2 times the mean
// gradient; the sigma2 component is (y - mu)^2/(2 sigma2^2) - 1/(2 sigma2).
Eigen::VectorXd score_at_null(Family f, const AdditiveParams& theta,
                              const Eigen::VectorXd& x, double y);

namespace detail {

// Mean and mean-gradient of the power-mean family in one pass, without
// heap allocation; returns the mean, writes the gradient (beta0, beta,
// lambda order) into `grad`.
double dim_mean_and_gradient(const DimParams& theta,
                             const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::VectorXd> grad);

}  // namespace detail

}  // namespace dimpim
