#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "dimpim/runconfig.hpp"
#include "dimpim/runner.hpp"
#include "dimpim/scenarios.hpp"

using dimpim::parse_config;
using dimpim::RunConfig;
using dimpim::RunOptions;

namespace {

struct RunCapture {
    int code = 0;
    std::string out;
    std::string err;
};

RunCapture run_config(const RunConfig& cfg, RunOptions opts = {}) {
    std::ostringstream out, err;
    opts.out = &out;
    opts.err = &err;
    RunCapture cap;
    cap.code = dimpim::run(cfg, opts);
    cap.out = out.str();
    cap.err = err.str();
    return cap;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kCurveText =
    "mode = curve\n"
    "p = 3\n"
    "beta0 = 0\n"
    "beta = 0.5\n"
    "sigma2 = 1\n"
    "truth = dim\n";

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("a curve run emits one row per drift value with both fits") {
    const RunConfig cfg = parse_config(kCurveText);
    const RunCapture cap = run_config(cfg);
    REQUIRE(cap.code == 0);
    CHECK(cap.err.empty());

    const auto lines = split_lines(cap.out);
    REQUIRE(lines.size() == 62);
    CHECK(lines[0] == "delta,power_dim_fit,power_pim_fit");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        REQUIRE(fields.size() == 3);
        const double power_dim = std::strtod(fields[1].c_str(), nullptr);
        const double power_pim = std::strtod(fields[2].c_str(), nullptr);
        CHECK(power_dim >= 0.05 - 1e-9);
        CHECK(power_dim <= 1.0);
        CHECK(power_pim >= 0.05 - 1e-9);
        CHECK(power_pim <= 1.0);
    }
    // Row 31 is delta = 0: both tests sit exactly at their level.
    const auto center = split_fields(lines[31]);
    CHECK(std::strtod(center[0].c_str(), nullptr) == 0.0);
    CHECK(std::abs(std::strtod(center[1].c_str(), nullptr) - 0.05) < 1e-8);
    CHECK(std::abs(std::strtod(center[2].c_str(), nullptr) - 0.05) < 1e-8);
}

TEST_CASE("the seventeen-digit format round-trips the computed powers exactly") {
    const RunConfig cfg = parse_config(
        "mode = curve\np = 3\nbeta0 = 0\nbeta = 0.5\nsigma2 = 1\ntruth = dim\n"
        "fit = dim\ndelta_min = 0\ndelta_max = 2\ndelta_steps = 5\n");
    const RunCapture cap = run_config(cfg);
    REQUIRE(cap.code == 0);

    dimpim::PowerScenario sc{cfg.distribution(), cfg.null_params(), cfg.truth,
                             dimpim::dim_direction(cfg.p), cfg.alpha, cfg.deltas()};
    const auto curve = dimpim::power_curve(sc, dimpim::Family::Dim);

    const auto lines = split_lines(cap.out);
    CHECK(lines[0] == "delta,power_dim_fit");
    REQUIRE(lines.size() == curve.size() + 1);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto fields = split_fields(lines[i + 1]);
        REQUIRE(fields.size() == 2);
        CHECK(std::strtod(fields[0].c_str(), nullptr) == curve[i].delta);
        CHECK(std::strtod(fields[1].c_str(), nullptr) == curve[i].power);
    }
}

TEST_CASE("repeated runs produce byte-identical output") {
    const RunConfig cfg = parse_config(kCurveText);
    const RunCapture a = run_config(cfg);
    const RunCapture b = run_config(cfg);
    CHECK(a.out == b.out);
}

TEST_CASE("the fit choice selects the emitted columns") {
    RunConfig cfg = parse_config(
        "mode = curve\np = 3\nbeta0 = 0\nbeta = 0.5\nsigma2 = 1\ntruth = dim\nfit = pim\n");
    const RunCapture cap = run_config(cfg);
    REQUIRE(cap.code == 0);
    CHECK(split_lines(cap.out)[0] == "delta,power_pim_fit");
}

TEST_CASE("output lands in a file when a path is given") {
    const RunConfig cfg = parse_config(kCurveText);
    const RunCapture streamed = run_config(cfg);

    RunOptions opts;
    opts.out_override = "runner_curve_out.csv";
    const RunCapture filed = run_config(cfg, opts);
    REQUIRE(filed.code == 0);
    CHECK(filed.out.empty());
    CHECK(slurp("runner_curve_out.csv") == streamed.out);
    std::remove("runner_curve_out.csv");
}

TEST_CASE("an unwritable output path is a configuration error") {
    const RunConfig cfg = parse_config(kCurveText);
    RunOptions opts;
    opts.out_override = "no_such_directory_here/out.csv";
    const RunCapture cap = run_config(cfg, opts);
    CHECK(cap.code == 1);
    CHECK(cap.err.find("configuration error:") != std::string::npos);
    CHECK(cap.err.find("no_such_directory_here/out.csv") != std::string::npos);
}

TEST_CASE("a grid run emits long-format rows and the plotting script") {
    RunConfig cfg = parse_config(
        "mode = grid\np = 3\nbeta0 = 0\nbeta = 0.5\nsigma2 = 1\ntruth = pim\n"
        "delta_min = 0\ndelta_max = 2\ndelta_steps = 3\n"
        "f1_levels = 0.5, 1\nf2_levels = 0.5\nf3_levels = 1, 2\n"
        "plot_script = runner_grid_plot.py\nout = runner_grid_out.csv\n");
    std::ostringstream err;
    RunOptions opts;
    opts.err = &err;
    REQUIRE(dimpim::run(cfg, opts) == 0);

    const std::string csv = slurp("runner_grid_out.csv");
    const auto lines = split_lines(csv);
    // 4 cells x 3 deltas x 2 fitted families, plus the header.
    REQUIRE(lines.size() == 25);
    CHECK(lines[0] == "f1,f2,f3,delta,fit,power");
    CHECK(csv.find(",dim,") != std::string::npos);
    CHECK(csv.find(",pim,") != std::string::npos);

    const std::string script = slurp("runner_grid_plot.py");
    CHECK(script.find("matplotlib") != std::string::npos);
    CHECK(script.find("runner_grid_out.csv") != std::string::npos);

    std::remove("runner_grid_out.csv");
    std::remove("runner_grid_plot.py");
}

TEST_CASE("a monte carlo run reports rates with uncertainty") {
    const RunConfig cfg = parse_config(
        "mode = mc\np = 3\nbeta0 = 0\nbeta = 0.5\nsigma2 = 1\ntruth = pim\n"
        "f1 = 1\nf2 = 1\nf3 = 1\nfit = pim\nn = 400\nreps = 150\nseed = 11\n"
        "delta_min = 0\ndelta_max = 2\ndelta_steps = 2\n");
    const RunCapture cap = run_config(cfg);
    REQUIRE(cap.code == 0);
    const auto lines = split_lines(cap.out);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "delta,fit,n,reps,rate,se,nonconverged");
    const auto row = split_fields(lines[1]);
    REQUIRE(row.size() == 7);
    CHECK(row[1] == "pim");
    CHECK(row[2] == "400");
    CHECK(row[3] == "150");

    // Same seed reproduces the bytes; a different seed changes the rates.
    CHECK(run_config(cfg).out == cap.out);
    RunOptions reseeded;
    reseeded.has_seed_override = true;
    reseeded.seed_override = 12;
    CHECK(run_config(cfg, reseeded).out != cap.out);
}

TEST_CASE("a degenerate null point is a numerical failure, not a crash") {
    // All-zero slopes erase the exponent direction from the information
    // matrix, so the asymptotics cannot be formed.
    const RunConfig cfg = parse_config(
        "mode = curve\np = 3\nbeta0 = 0\nbeta = 0\nsigma2 = 1\ntruth = dim\n");
    const RunCapture cap = run_config(cfg);
    CHECK(cap.code == 2);
    CHECK(cap.err.find("numerical failure:") != std::string::npos);
    CHECK(cap.out.empty());
}

#ifdef DIMPIM_CLI_PATH
TEST_CASE("the command-line tool wires arguments through to the library") {
    const std::string cli = DIMPIM_CLI_PATH;
    auto shell = [](const std::string& cmd) {
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(shell("'" + cli + "' --help > cli_help.txt 2>&1") == 0);
    const std::string help = slurp("cli_help.txt");
    CHECK(help.find("--config") != std::string::npos);
    std::remove("cli_help.txt");

    CHECK(shell("'" + cli + "' > /dev/null 2> cli_noargs.txt") == 1);
    std::remove("cli_noargs.txt");

    CHECK(shell("'" + cli + "' --config missing_config.cfg > /dev/null 2> cli_badcfg.txt") ==
          1);
    CHECK(slurp("cli_badcfg.txt").find("configuration error") != std::string::npos);
    std::remove("cli_badcfg.txt");

    {
        std::ofstream cfg("cli_curve.cfg");
        cfg << kCurveText << "delta_min = 0\ndelta_max = 1\ndelta_steps = 3\n";
    }
    CHECK(shell("'" + cli + "' --config cli_curve.cfg --out cli_curve_out.csv") == 0);
    const auto lines = split_lines(slurp("cli_curve_out.csv"));
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "delta,power_dim_fit,power_pim_fit");

    // A seed override is meaningless outside mc mode and is refused.
    CHECK(shell("'" + cli +
                "' --config cli_curve.cfg --seed 7 > /dev/null 2> cli_seed.txt") == 1);
    CHECK(slurp("cli_seed.txt").find("mc mode") != std::string::npos);
    std::remove("cli_seed.txt");
    std::remove("cli_curve.cfg");
    std::remove("cli_curve_out.csv");
}
#endif

}  // TEST_SUITE
