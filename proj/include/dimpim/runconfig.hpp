#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dimpim/models.hpp"
#include "dimpim/scenarios.hpp"

namespace dimpim {

enum class RunMode { Curve, Grid, Mc };
enum class FitChoice { Dim, Pim, Both };

// A fully validated batch run description.  Parsed from key = value text;
// see parse_config for the key list and defaults.
struct RunConfig {
    RunMode mode = RunMode::Curve;
    int p = 0;
    Eigen::VectorXd q;  // per-component Bernoulli probabilities
    double beta0 = 0.0;
    Eigen::VectorXd beta;
    double sigma2 = 1.0;
    double alpha = 0.05;
    Family truth = Family::Dim;
    FitChoice fit = FitChoice::Both;

    bool has_factors = false;
    PrimaryFactors factors;  // drift direction knobs when truth = pim

    double delta_min = -3.0;
    double delta_max = 3.0;
    int delta_steps = 61;

    // grid mode factor levels
    std::vector<double> f1_levels{0.2, 0.5, 0.8};
    std::vector<double> f2_levels{0.2, 0.5, 0.8};
    std::vector<double> f3_levels{0.5, 1.0, 2.0};

    // mc mode settings
    int n = 0;
    int reps = 0;
    std::uint64_t seed = 0;

    std::string out_path;     // empty = standard output
    std::string plot_script;  // if nonempty (grid mode), write a plotting script here

    CovariateDistribution distribution() const;
    AdditiveParams null_params() const;
    std::vector<double> deltas() const;
};

// Parse key = value lines ('#' starts a comment).  Unknown keys, duplicate
// keys, missing required keys, and constraint violations all raise
// ConfigError with the offending line number where one applies.
RunConfig parse_config(const std::string& text);

RunConfig parse_config_file(const std::string& path);

}  // namespace dimpim
