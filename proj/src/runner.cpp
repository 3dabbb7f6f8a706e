#include "dimpim/runner.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "dimpim/errors.hpp"
#include "dimpim/mcvalidate.hpp"
#include "dimpim/scenarios.hpp"

namespace dimpim {

namespace {

// Loss-free decimal rendering of a double (17 significant digits).
std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

PowerScenario scenario_from_config(const RunConfig& cfg) {
    PowerScenario sc{cfg.distribution(), cfg.null_params(), Family::Dim,
                     Eigen::VectorXd(), 0.05, {}};
    sc.truth = cfg.truth;
    sc.alpha = cfg.alpha;
    sc.delta_grid = cfg.deltas();
    if (cfg.truth == Family::Dim) {
        sc.eta = dim_direction(cfg.p);
    } else {
        sc.eta = pim_direction(cfg.p, build_eta_from_factors(cfg.p, cfg.factors));
    }
    return sc;
}

std::string curve_csv(const RunConfig& cfg, int threads) {
    (void)threads;  // curve mode is cheap; moments dominate and run once
    const PowerScenario sc = scenario_from_config(cfg);
    const bool want_dim = cfg.fit != FitChoice::Pim;
    const bool want_pim = cfg.fit != FitChoice::Dim;

    std::vector<PowerPoint> dim_curve, pim_curve;
    if (want_dim) dim_curve = power_curve(sc, Family::Dim);
    if (want_pim) pim_curve = power_curve(sc, Family::Pim);

    std::ostringstream csv;
    csv << "delta";
    if (want_dim) csv << ",power_dim_fit";
    if (want_pim) csv << ",power_pim_fit";
    csv << "\n";
    for (std::size_t i = 0; i < sc.delta_grid.size(); ++i) {
        csv << fmt17(sc.delta_grid[i]);
        if (want_dim) csv << "," << fmt17(dim_curve[i].power);
        if (want_pim) csv << "," << fmt17(pim_curve[i].power);
        csv << "\n";
    }
    return csv.str();
}

std::string grid_csv(const RunConfig& cfg, int threads) {
    const std::vector<GridCell> cells =
        factor_grid_sweep(cfg.distribution(), cfg.null_params(), cfg.alpha, cfg.deltas(),
                          cfg.f1_levels, cfg.f2_levels, cfg.f3_levels, threads);
    const bool want_dim = cfg.fit != FitChoice::Pim;
    const bool want_pim = cfg.fit != FitChoice::Dim;

    std::ostringstream csv;
    csv << "f1,f2,f3,delta,fit,power\n";
    for (const GridCell& cell : cells) {
        const std::string prefix = fmt17(cell.factors.f1) + "," + fmt17(cell.factors.f2) +
                                   "," + fmt17(cell.factors.f3) + ",";
        if (want_dim) {
            for (const PowerPoint& pt : cell.dim_fit) {
                csv << prefix << fmt17(pt.delta) << ",dim," << fmt17(pt.power) << "\n";
            }
        }
        if (want_pim) {
            for (const PowerPoint& pt : cell.pim_fit) {
                csv << prefix << fmt17(pt.delta) << ",pim," << fmt17(pt.power) << "\n";
            }
        }
    }
    return csv.str();
}

std::string mc_csv(const RunConfig& cfg, int threads, std::uint64_t seed) {
    const PowerScenario sc = scenario_from_config(cfg);
    const bool want_dim = cfg.fit != FitChoice::Pim;
    const bool want_pim = cfg.fit != FitChoice::Dim;

    std::ostringstream csv;
    csv << "delta,fit,n,reps,rate,se,nonconverged\n";
    auto emit = [&](Family fit) {
        const std::vector<RejectionResult> results =
            rejection_rate(sc, fit, cfg.n, cfg.reps, seed, threads);
        for (const RejectionResult& r : results) {
            csv << fmt17(r.delta) << "," << to_string(fit) << "," << cfg.n << ","
                << r.reps_total << "," << fmt17(r.rate) << "," << fmt17(r.se) << ","
                << fmt17(r.nonconverged_fraction) << "\n";
        }
    };
    if (want_dim) emit(Family::Dim);
    if (want_pim) emit(Family::Pim);
    return csv.str();
}

// Self-contained matplotlib script that rebuilds the panel layout (one
// figure per f3 level, f1 x f2 panels, one line per fitted family).
std::string plot_script_text(const std::string& default_csv) {
    std::ostringstream py;
    py << "#!/usr/bin/env python3\n"
       << "\"\"\"Rebuild the power-grid panels from the long-format CSV.\"\"\"\n"
       << "import sys\n"
       << "import matplotlib\n"
       << "matplotlib.use(\"Agg\")\n"
       << "import matplotlib.pyplot as plt\n"
       << "import csv as csvmod\n"
       << "\n"
       << "path = sys.argv[1] if len(sys.argv) > 1 else \"" << default_csv << "\"\n"
       << "rows = []\n"
       << "with open(path) as fh:\n"
       << "    for rec in csvmod.DictReader(fh):\n"
       << "        rows.append({k: (v if k == \"fit\" else float(v)) for k, v in rec.items()})\n"
       << "f1s = sorted({r[\"f1\"] for r in rows})\n"
       << "f2s = sorted({r[\"f2\"] for r in rows})\n"
       << "f3s = sorted({r[\"f3\"] for r in rows})\n"
       << "for f3 in f3s:\n"
       << "    fig, axes = plt.subplots(len(f1s), len(f2s), squeeze=False,\n"
       << "                             figsize=(3.2 * len(f2s), 2.6 * len(f1s)),\n"
       << "                             sharex=True, sharey=True)\n"
       << "    for i, f1 in enumerate(f1s):\n"
       << "        for j, f2 in enumerate(f2s):\n"
       << "            ax = axes[i][j]\n"
       << "            for fit, style in ((\"dim\", \"-\"), (\"pim\", \"--\")):\n"
       << "                pts = [(r[\"delta\"], r[\"power\"]) for r in rows\n"
       << "                       if r[\"f1\"] == f1 and r[\"f2\"] == f2\n"
       << "                       and r[\"f3\"] == f3 and r[\"fit\"] == fit]\n"
       << "                pts.sort()\n"
       << "                if pts:\n"
       << "                    ax.plot([d for d, _ in pts], [w for _, w in pts],\n"
       << "                            style, label=fit + \" fit\")\n"
       << "            ax.set_title(f\"f1={f1:g}, f2={f2:g}\", fontsize=9)\n"
       << "    axes[0][0].legend(fontsize=8)\n"
       << "    for ax in axes[-1]:\n"
       << "        ax.set_xlabel(\"Delta\")\n"
       << "    for row in axes:\n"
       << "        row[0].set_ylabel(\"power\")\n"
       << "    fig.suptitle(f\"f3 = {f3:g}\")\n"
       << "    out = f\"power_grid_f3_{f3:g}.png\"\n"
       << "    fig.tight_layout()\n"
       << "    fig.savefig(out, dpi=150)\n"
       << "    print(\"wrote\", out)\n";
    return py.str();
}

void write_text_file(const std::string& path, const std::string& text, const char* what) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError(std::string("cannot open ") + what + " '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw ConfigError(std::string("failed writing ") + what + " '" + path + "'");
    }
}

}  // namespace

int run(const RunConfig& cfg, const RunOptions& opts) {
    std::ostream& err = opts.err != nullptr ? *opts.err : std::cerr;
    try {
        const int threads = opts.threads;
        std::string csv;
        switch (cfg.mode) {
            case RunMode::Curve:
                csv = curve_csv(cfg, threads);
                break;
            case RunMode::Grid:
                csv = grid_csv(cfg, threads);
                break;
            case RunMode::Mc: {
                const std::uint64_t seed =
                    opts.has_seed_override ? opts.seed_override : cfg.seed;
                csv = mc_csv(cfg, threads, seed);
                break;
            }
        }

        const std::string out_path =
            !opts.out_override.empty() ? opts.out_override : cfg.out_path;
        if (out_path.empty()) {
            std::ostream& out = opts.out != nullptr ? *opts.out : std::cout;
            out << csv;
            out.flush();
        } else {
            write_text_file(out_path, csv, "output file");
        }

        if (cfg.mode == RunMode::Grid && !cfg.plot_script.empty()) {
            const std::string default_csv = out_path.empty() ? "power_grid.csv" : out_path;
            write_text_file(cfg.plot_script, plot_script_text(default_csv), "plot script");
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const SingularMatrixError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace dimpim
