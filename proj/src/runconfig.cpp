#include "dimpim/runconfig.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "dimpim/errors.hpp"

namespace dimpim {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct RawEntry {
    std::string value;
    int line = 0;
};

// Raw key/value text with line provenance for error messages.
class KeyTable {
  public:
    void insert(const std::string& key, const std::string& value, int line) {
        const auto found = entries_.find(key);
        if (found != entries_.end()) {
            std::ostringstream msg;
            msg << "duplicate key '" << key << "' on line " << line
                << " (first set on line " << found->second.line << ")";
            throw ConfigError(msg.str(), line);
        }
        entries_[key] = RawEntry{value, line};
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    const RawEntry& get(const std::string& key) const { return entries_.at(key); }

    int line_of(const std::string& key) const {
        const auto found = entries_.find(key);
        return found == entries_.end() ? 0 : found->second.line;
    }

    const std::map<std::string, RawEntry>& all() const { return entries_; }

  private:
    std::map<std::string, RawEntry> entries_;
};

[[noreturn]] void fail(const std::string& key, int line, const std::string& what) {
    std::ostringstream msg;
    msg << "key '" << key << "'";
    if (line > 0) msg << " (line " << line << ")";
    msg << ": " << what;
    throw ConfigError(msg.str(), line);
}

double parse_real(const KeyTable& t, const std::string& key) {
    const RawEntry& e = t.get(key);
    const char* begin = e.value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        fail(key, e.line, "'" + e.value + "' is not a number");
    }
    return v;
}

long parse_integer(const KeyTable& t, const std::string& key) {
    const RawEntry& e = t.get(key);
    const char* begin = e.value.c_str();
    char* end = nullptr;
    const long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0') {
        fail(key, e.line, "'" + e.value + "' is not an integer");
    }
    return v;
}

std::uint64_t parse_u64(const KeyTable& t, const std::string& key) {
    const RawEntry& e = t.get(key);
    if (!e.value.empty() && e.value[0] == '-') {
        fail(key, e.line, "'" + e.value + "' must be a nonnegative integer");
    }
    const char* begin = e.value.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0') {
        fail(key, e.line, "'" + e.value + "' is not an unsigned integer");
    }
    return static_cast<std::uint64_t>(v);
}

std::vector<double> parse_real_list(const KeyTable& t, const std::string& key) {
    const RawEntry& e = t.get(key);
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(key, e.line, "empty entry in comma-separated list");
        const char* begin = item.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
            fail(key, e.line, "'" + item + "' is not a number");
        }
        out.push_back(v);
    }
    if (out.empty()) fail(key, e.line, "expected at least one value");
    return out;
}

// Scalar broadcast (one value -> p copies) or a full comma-separated vector.
Eigen::VectorXd parse_broadcast_vector(const KeyTable& t, const std::string& key, int p) {
    const std::vector<double> values = parse_real_list(t, key);
    if (values.size() == 1) {
        return Eigen::VectorXd::Constant(p, values[0]);
    }
    if (static_cast<int>(values.size()) != p) {
        std::ostringstream msg;
        msg << "expected 1 or " << p << " comma-separated values, got " << values.size();
        fail(key, t.line_of(key), msg.str());
    }
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v[i] = values[static_cast<std::size_t>(i)];
    return v;
}

void require_keys(const KeyTable& t, const std::vector<std::string>& keys,
                  const std::string& why) {
    for (const auto& key : keys) {
        if (!t.has(key)) {
            throw ConfigError("missing required key '" + key + "' (" + why + ")");
        }
    }
}

void forbid_key(const KeyTable& t, const std::string& key, const std::string& why) {
    if (t.has(key)) fail(key, t.line_of(key), why);
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "mode",        "p",         "covariate", "q",           "beta0",
        "beta",        "sigma2",    "alpha",     "truth",       "fit",
        "f1",          "f2",        "f3",        "delta_min",   "delta_max",
        "delta_steps", "f1_levels", "f2_levels", "f3_levels",   "n",
        "reps",        "seed",      "out",       "plot_script",
    };
    return keys;
}

}  // namespace

CovariateDistribution RunConfig::distribution() const {
    return CovariateDistribution::product_bernoulli(q);
}

AdditiveParams RunConfig::null_params() const {
    AdditiveParams params;
    params.beta0 = beta0;
    params.beta = beta;
    params.sigma2 = sigma2;
    return params;
}

std::vector<double> RunConfig::deltas() const {
    return make_delta_grid(delta_min, delta_max, delta_steps);
}

RunConfig parse_config(const std::string& text) {
    KeyTable table;
    {
        std::stringstream ss(text);
        std::string raw_line;
        int line_no = 0;
        while (std::getline(ss, raw_line)) {
            ++line_no;
            const std::size_t hash = raw_line.find('#');
            if (hash != std::string::npos) raw_line.erase(hash);
            const std::string line = trim(raw_line);
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("line " + std::to_string(line_no) +
                                      ": expected 'key = value', got '" + line + "'",
                                  line_no);
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ConfigError("line " + std::to_string(line_no) + ": empty key", line_no);
            }
            if (value.empty()) {
                fail(key, line_no, "empty value");
            }
            table.insert(key, value, line_no);
        }
    }

    for (const auto& [key, entry] : table.all()) {
        bool known = false;
        for (const auto& k : known_keys()) {
            if (k == key) {
                known = true;
                break;
            }
        }
        if (!known) fail(key, entry.line, "unknown key");
    }

    require_keys(table, {"mode", "p", "beta0", "beta", "sigma2", "truth"},
                 "every run needs the mode and the null-model parameters");

    RunConfig cfg;

    {
        const std::string mode = table.get("mode").value;
        if (mode == "curve") {
            cfg.mode = RunMode::Curve;
        } else if (mode == "grid") {
            cfg.mode = RunMode::Grid;
        } else if (mode == "mc") {
            cfg.mode = RunMode::Mc;
        } else {
            fail("mode", table.line_of("mode"), "'" + mode + "' is not one of curve, grid, mc");
        }
    }

    {
        const long p = parse_integer(table, "p");
        if (p < 2) fail("p", table.line_of("p"), "need p >= 2 for interaction tests");
        if (p > 24) fail("p", table.line_of("p"), "p > 24 exceeds the support enumeration cap");
        cfg.p = static_cast<int>(p);
    }

    if (table.has("covariate")) {
        const std::string cov = table.get("covariate").value;
        if (cov != "bernoulli") {
            fail("covariate", table.line_of("covariate"),
                 "'" + cov + "' is not supported (only 'bernoulli')");
        }
    }
    if (table.has("q")) {
        cfg.q = parse_broadcast_vector(table, "q", cfg.p);
        for (int i = 0; i < cfg.p; ++i) {
            if (!(cfg.q[i] > 0.0 && cfg.q[i] < 1.0)) {
                fail("q", table.line_of("q"), "components must lie strictly in (0, 1)");
            }
        }
    } else {
        cfg.q = Eigen::VectorXd::Constant(cfg.p, 0.5);
    }

    cfg.beta0 = parse_real(table, "beta0");
    cfg.beta = parse_broadcast_vector(table, "beta", cfg.p);
    for (int i = 0; i < cfg.p; ++i) {
        if (cfg.beta[i] < 0.0) {
            fail("beta", table.line_of("beta"), "components must be nonnegative");
        }
    }

    cfg.sigma2 = parse_real(table, "sigma2");
    if (!(cfg.sigma2 > 0.0)) {
        fail("sigma2", table.line_of("sigma2"), "must be positive");
    }

    if (table.has("alpha")) {
        cfg.alpha = parse_real(table, "alpha");
        if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
            fail("alpha", table.line_of("alpha"), "must lie strictly in (0, 1)");
        }
    }

    {
        const std::string truth = table.get("truth").value;
        if (truth == "dim") {
            cfg.truth = Family::Dim;
        } else if (truth == "pim") {
            cfg.truth = Family::Pim;
        } else {
            fail("truth", table.line_of("truth"),
                 "'" + truth + "' is not one of dim, pim");
        }
    }

    if (table.has("fit")) {
        const std::string fit = table.get("fit").value;
        if (fit == "dim") {
            cfg.fit = FitChoice::Dim;
        } else if (fit == "pim") {
            cfg.fit = FitChoice::Pim;
        } else if (fit == "both") {
            cfg.fit = FitChoice::Both;
        } else {
            fail("fit", table.line_of("fit"), "'" + fit + "' is not one of dim, pim, both");
        }
    }

    if (table.has("delta_min")) cfg.delta_min = parse_real(table, "delta_min");
    if (table.has("delta_max")) cfg.delta_max = parse_real(table, "delta_max");
    if (table.has("delta_steps")) {
        const long steps = parse_integer(table, "delta_steps");
        if (steps < 1 || steps > 100000) {
            fail("delta_steps", table.line_of("delta_steps"), "must be between 1 and 100000");
        }
        cfg.delta_steps = static_cast<int>(steps);
    }
    try {
        cfg.deltas();
    } catch (const DomainError& e) {
        fail("delta_min", table.line_of("delta_min"), e.what());
    }

    // Drift-direction factors: required for pim truth outside grid mode,
    // meaningless otherwise.
    if (cfg.mode != RunMode::Grid && cfg.truth == Family::Pim) {
        require_keys(table, {"f1", "f2", "f3"},
                     "pim truth needs the interaction-direction factors");
    }
    for (const char* key : {"f1", "f2", "f3"}) {
        if (!table.has(key)) continue;
        if (cfg.mode == RunMode::Grid) {
            fail(key, table.line_of(key), "grid mode sweeps factor levels; use f1_levels etc.");
        }
        if (cfg.truth != Family::Pim) {
            fail(key, table.line_of(key), "factors only apply when truth = pim");
        }
    }
    if (table.has("f1")) {
        cfg.factors.f1 = parse_real(table, "f1");
        cfg.factors.f2 = parse_real(table, "f2");
        cfg.factors.f3 = parse_real(table, "f3");
        cfg.has_factors = true;
        try {
            cfg.factors.validate();
            build_eta_from_factors(cfg.p, cfg.factors);
        } catch (const DomainError& e) {
            fail("f1", table.line_of("f1"), e.what());
        }
    }

    for (const char* key : {"f1_levels", "f2_levels", "f3_levels"}) {
        if (table.has(key) && cfg.mode != RunMode::Grid) {
            fail(key, table.line_of(key), "factor levels only apply in grid mode");
        }
    }
    if (cfg.mode == RunMode::Grid) {
        if (cfg.truth != Family::Pim) {
            fail("truth", table.line_of("truth"), "grid mode requires truth = pim");
        }
        if (table.has("f1_levels")) cfg.f1_levels = parse_real_list(table, "f1_levels");
        if (table.has("f2_levels")) cfg.f2_levels = parse_real_list(table, "f2_levels");
        if (table.has("f3_levels")) cfg.f3_levels = parse_real_list(table, "f3_levels");
        for (const double f1 : cfg.f1_levels) {
            for (const double f2 : cfg.f2_levels) {
                for (const double f3 : cfg.f3_levels) {
                    try {
                        PrimaryFactors f{f1, f2, f3};
                        f.validate();
                        build_eta_from_factors(cfg.p, f);
                    } catch (const DomainError& e) {
                        fail("f1_levels", table.line_of("f1_levels"), e.what());
                    }
                }
            }
        }
    } else {
        forbid_key(table, "plot_script", "the plotting script is only written in grid mode");
    }

    for (const char* key : {"n", "reps"}) {
        if (table.has(key) && cfg.mode != RunMode::Mc) {
            fail(key, table.line_of(key), "only applies in mc mode");
        }
    }
    if (table.has("seed") && cfg.mode != RunMode::Mc) {
        fail("seed", table.line_of("seed"), "only applies in mc mode");
    }
    if (cfg.mode == RunMode::Mc) {
        require_keys(table, {"n", "reps"}, "mc mode needs the sample size and replicate count");
        const long n = parse_integer(table, "n");
        if (n < 1) fail("n", table.line_of("n"), "must be positive");
        cfg.n = static_cast<int>(n);
        const long reps = parse_integer(table, "reps");
        if (reps < 100) fail("reps", table.line_of("reps"), "need reps >= 100");
        cfg.reps = static_cast<int>(reps);
        if (table.has("seed")) cfg.seed = parse_u64(table, "seed");
    }

    if (table.has("out")) cfg.out_path = table.get("out").value;
    if (table.has("plot_script")) cfg.plot_script = table.get("plot_script").value;

    // Final cross-checks through the module validators so nothing invalid
    // slips through composition.
    try {
        cfg.null_params().validate();
        cfg.distribution();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid model configuration: ") + e.what());
    }

    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace dimpim
