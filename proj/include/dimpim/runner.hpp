#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dimpim/runconfig.hpp"

namespace dimpim {

struct RunOptions {
    std::string out_override;  // nonempty: write the CSV here instead
    int threads = 0;           // 0 = all hardware threads
    bool has_seed_override = false;
    std::uint64_t seed_override = 0;  // mc mode only
    std::ostream* out = nullptr;      // CSV sink when no path is set (default std::cout)
    std::ostream* err = nullptr;      // diagnostics (default std::cerr)
};

// Execute a validated config and write its CSV (plus the optional grid-mode
// plotting script).  Returns 0 on success, 1 on configuration errors, and 2
// on numerical failures (singularity / non-convergence), with the failure
// context written to the diagnostic stream.
int run(const RunConfig& cfg, const RunOptions& opts = {});

}  // namespace dimpim
