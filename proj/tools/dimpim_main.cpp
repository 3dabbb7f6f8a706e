// Command-line front-end: computes asymptotic power curves and factor-grid
// sweeps for interaction Wald tests, plus Monte Carlo validation runs.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dimpim/errors.hpp"
#include "dimpim/runconfig.hpp"
#include "dimpim/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "Asymptotic power of interaction Wald tests for additive-by-default "
        "regression (power-mean and pairwise-product alternatives)"};

    std::string config_path;
    std::string out_path;
    int threads = 0;
    std::uint64_t seed = 0;

    app.add_option("--config", config_path, "Path to the key = value run configuration")
        ->required();
    app.add_option("--out", out_path,
                   "Write the CSV to this path (default: standard output)");
    app.add_option("--threads", threads,
                   "Worker threads (default 0 = all hardware threads)")
        ->check(CLI::NonNegativeNumber);
    auto* seed_opt =
        app.add_option("--seed", seed, "Master seed for mc mode (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help exits 0; bad flags are config errors
    }

    dimpim::RunConfig cfg;
    try {
        cfg = dimpim::parse_config_file(config_path);
    } catch (const dimpim::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    }

    if (seed_opt->count() > 0 && cfg.mode != dimpim::RunMode::Mc) {
        std::cerr << "configuration error: --seed only applies in mc mode\n";
        return 1;
    }

    dimpim::RunOptions opts;
    opts.out_override = out_path;
    opts.threads = threads;
    if (seed_opt->count() > 0) {
        opts.has_seed_override = true;
        opts.seed_override = seed;
    }
    return dimpim::run(cfg, opts);
}
