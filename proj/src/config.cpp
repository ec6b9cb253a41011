#include "lageb/config.hpp"

#include "lageb/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace lageb {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw InputError("config key '" + key + "': " + what);
}

double get_real(const json& v, const std::string& key) {
    if (!v.is_number()) {
        bad(key, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        bad(key, "expected a finite number");
    }
    return d;
}

double get_positive(const json& v, const std::string& key) {
    const double d = get_real(v, key);
    if (!(d > 0.0)) {
        bad(key, "expected a positive number");
    }
    return d;
}

// Integers may be written as 1e5 as long as the value is integral.
long long get_integer(const json& v, const std::string& key, long long lo, long long hi) {
    const double d = get_real(v, key);
    if (d != std::floor(d) || d < static_cast<double>(lo) || d > static_cast<double>(hi)) {
        bad(key, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<long long>(d);
}

std::string get_string(const json& v, const std::string& key) {
    if (!v.is_string()) {
        bad(key, "expected a string");
    }
    return v.get<std::string>();
}

std::vector<double> get_real_list(const json& v, const std::string& key) {
    if (!v.is_array()) {
        bad(key, "expected an array of numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) {
        out.push_back(get_real(e, key));
    }
    return out;
}

std::optional<double> get_optional_real(const json& v, const std::string& key) {
    if (v.is_null()) {
        return std::nullopt;
    }
    return get_real(v, key);
}

bool known_mixing(const std::string& name) {
    const auto& names = mixing_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

} // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"mixing", "string", "exponential",
         "conditional family: uniform, pareto, beta, exponential, rayleigh, weibull"},
        {"mixing_alpha", "real", "family default",
         "known shape: pareto alpha > 2 (3), beta alpha > 0 (2), weibull alpha > 0 (2)"},
        {"theta_lo", "real", "0.5", "uniform mixing: lower end of the theta domain"},
        {"theta_hi", "real", "3.0", "uniform mixing: upper end of the theta domain"},
        {"theta_max", "real", "3.0", "pareto mixing: upper end of the theta domain, > 1"},
        {"prior", "string", "family default",
         "prior on theta: gamma, uniform, truncated_gamma"},
        {"prior_shape", "real", "2.0", "gamma and truncated_gamma shape"},
        {"prior_rate", "real", "1.0", "gamma and truncated_gamma rate"},
        {"prior_lo", "real", "family default", "uniform and truncated_gamma lower bound"},
        {"prior_hi", "real", "family default", "uniform and truncated_gamma upper bound"},
        {"sample_sizes", "integer list", "[1000, 10000, 100000]",
         "study sample sizes, strictly increasing"},
        {"replications", "integer", "50", "study replications per sample size, >= 2"},
        {"eval_points", "real list", "marginal quartiles",
         "query points y; empty selects the quartiles of a pilot sample"},
        {"r_star", "real", "1.0", "smoothness used by the truncation schedule"},
        {"rate_constant", "real", "1.0", "multiplier in the truncation schedule"},
        {"seed", "integer", "20240601", "master seed for all random streams"},
        {"threads", "integer", "0", "worker threads for studies; 0 uses all cores"},
        {"k_max", "integer", "8", "verify-u: highest order checked"},
        {"theta_grid", "real list", "family default", "verify-u: theta values checked"},
    };
    return keys;
}

std::string config_keys_help() {
    std::ostringstream os;
    os << "Config keys (JSON object or 'key = value' lines, '#' comments):\n";
    for (const auto& k : config_keys()) {
        os << "  " << k.name << " (" << k.type << ", default " << k.fallback << ")\n      "
           << k.help << "\n";
    }
    return os.str();
}

const std::vector<std::string>& mixing_names() {
    static const std::vector<std::string> names = {"uniform",     "pareto",   "beta",
                                                   "exponential", "rayleigh", "weibull"};
    return names;
}

void apply_config(ExperimentConfig& cfg, const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw InputError("config must be a JSON object or a list of key = value lines");
    }
    std::set<std::string> known;
    for (const auto& k : config_keys()) {
        known.emplace(k.name);
    }
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) {
            throw InputError("unknown config key '" + key + "'");
        }
        if (key == "mixing") {
            cfg.mixing = get_string(value, key);
            if (!known_mixing(cfg.mixing)) {
                bad(key, "unknown family '" + cfg.mixing + "'");
            }
        } else if (key == "mixing_alpha") {
            cfg.mixing_alpha = get_optional_real(value, key);
        } else if (key == "theta_lo") {
            cfg.theta_lo = get_optional_real(value, key);
        } else if (key == "theta_hi") {
            cfg.theta_hi = get_optional_real(value, key);
        } else if (key == "theta_max") {
            cfg.theta_max = get_optional_real(value, key);
        } else if (key == "prior") {
            if (value.is_null()) {
                cfg.prior.reset();
            } else {
                const std::string p = get_string(value, key);
                if (p != "gamma" && p != "uniform" && p != "truncated_gamma") {
                    bad(key, "unknown prior '" + p + "'");
                }
                cfg.prior = p;
            }
        } else if (key == "prior_shape") {
            cfg.prior_shape = get_positive(value, key);
        } else if (key == "prior_rate") {
            cfg.prior_rate = get_positive(value, key);
        } else if (key == "prior_lo") {
            cfg.prior_lo = get_optional_real(value, key);
        } else if (key == "prior_hi") {
            cfg.prior_hi = get_optional_real(value, key);
        } else if (key == "sample_sizes") {
            if (!value.is_array() || value.empty()) {
                bad(key, "expected a nonempty array of integers");
            }
            cfg.sample_sizes.clear();
            for (const auto& e : value) {
                cfg.sample_sizes.push_back(
                    static_cast<std::size_t>(get_integer(e, key, 1, 1'000'000'000)));
            }
            for (std::size_t i = 1; i < cfg.sample_sizes.size(); ++i) {
                if (cfg.sample_sizes[i] <= cfg.sample_sizes[i - 1]) {
                    bad(key, "sample sizes must be strictly increasing");
                }
            }
        } else if (key == "replications") {
            cfg.replications = static_cast<int>(get_integer(value, key, 2, 1'000'000));
        } else if (key == "eval_points") {
            cfg.eval_points = get_real_list(value, key);
            for (double y : cfg.eval_points) {
                if (!(y > 0.0)) {
                    bad(key, "evaluation points must be positive");
                }
            }
        } else if (key == "r_star") {
            cfg.r_star = get_positive(value, key);
        } else if (key == "rate_constant") {
            cfg.rate_constant = get_positive(value, key);
        } else if (key == "seed") {
            if (!value.is_number_integer()) {
                bad(key, "expected a nonnegative integer");
            }
            if (value.is_number_unsigned()) {
                cfg.seed = value.get<std::uint64_t>();
            } else {
                const auto s = value.get<std::int64_t>();
                if (s < 0) {
                    bad(key, "expected a nonnegative integer");
                }
                cfg.seed = static_cast<std::uint64_t>(s);
            }
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(get_integer(value, key, 0, 4096));
        } else if (key == "k_max") {
            cfg.k_max = static_cast<int>(get_integer(value, key, 0, 64));
        } else if (key == "theta_grid") {
            cfg.theta_grid = get_real_list(value, key);
        }
    }
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    ExperimentConfig cfg;
    apply_config(cfg, doc);
    return cfg;
}

nlohmann::json parse_key_value(std::string_view text) {
    json doc = json::object();
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip a comment that is not inside a string
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) {
                quoted = !quoted;
            } else if (line[i] == '#' && !quoted) {
                line.erase(i);
                break;
            }
        }
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const std::string where = "config line " + std::to_string(lineno);
        if (body.front() == '[') {
            throw InputError(where + ": sections are not supported, keys are flat");
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw InputError(where + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty() || !std::all_of(key.begin(), key.end(), [](unsigned char c) {
                return std::islower(c) || std::isdigit(c) || c == '_';
            })) {
            throw InputError(where + ": invalid key '" + key + "'");
        }
        if (doc.contains(key)) {
            throw InputError(where + ": duplicate key '" + key + "'");
        }
        try {
            doc[key] = json::parse(value);
        } catch (const json::parse_error&) {
            throw InputError(where + ": cannot parse value '" + value + "'");
        }
    }
    return doc;
}

nlohmann::json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") {
        try {
            return json::parse(buf.str());
        } catch (const json::parse_error& e) {
            throw InputError("malformed JSON config " + path.string() + ": " + e.what());
        }
    }
    return parse_key_value(buf.str());
}

MixingModel make_mixing(const ExperimentConfig& cfg, std::string_view name) {
    if (name == "uniform") {
        return MixingModel::uniform(cfg.theta_lo.value_or(0.5), cfg.theta_hi.value_or(3.0));
    }
    if (name == "pareto") {
        return MixingModel::pareto(cfg.mixing_alpha.value_or(3.0), cfg.theta_max.value_or(3.0));
    }
    if (name == "beta") {
        return MixingModel::beta(cfg.mixing_alpha.value_or(2.0));
    }
    if (name == "exponential") {
        return MixingModel::exponential();
    }
    if (name == "rayleigh") {
        return MixingModel::rayleigh();
    }
    if (name == "weibull") {
        return MixingModel::weibull(cfg.mixing_alpha.value_or(2.0));
    }
    throw InputError("unknown mixing family '" + std::string(name) + "'");
}

MixingModel make_mixing(const ExperimentConfig& cfg) { return make_mixing(cfg, cfg.mixing); }

PriorModel make_prior(const ExperimentConfig& cfg, const MixingModel& mixing) {
    const PriorModel fallback = default_prior(mixing);
    const std::string kind = cfg.prior.value_or(std::string(fallback.name()));
    if (kind == "gamma" && !cfg.prior) {
        return fallback;
    }
    const auto bound = [&](const std::optional<double>& v, double def, const char* key) {
        if (v) {
            return *v;
        }
        if (!std::isfinite(def)) {
            throw InputError(std::string("the ") + kind + " prior needs " + key);
        }
        return def;
    };
    PriorModel prior = fallback;
    if (kind == "gamma") {
        prior = PriorModel::gamma(cfg.prior_shape, cfg.prior_rate);
    } else {
        const Interval s = fallback.support();
        const double lo = bound(cfg.prior_lo, s.lo, "prior_lo");
        const double hi = bound(cfg.prior_hi, s.hi, "prior_hi");
        prior = kind == "uniform"
                    ? PriorModel::uniform(lo, hi)
                    : PriorModel::truncated_gamma(cfg.prior_shape, cfg.prior_rate, lo, hi);
    }
    if (!prior_fits_domain(prior, mixing)) {
        throw InputError("the " + kind + " prior support is not inside the " +
                         std::string(mixing.name()) + " parameter domain");
    }
    return prior;
}

nlohmann::ordered_json config_echo(const ExperimentConfig& cfg) {
    const MixingModel mixing = make_mixing(cfg);
    const PriorModel prior = make_prior(cfg, mixing);
    nlohmann::ordered_json out;
    out["mixing"] = std::string(mixing.name());
    switch (mixing.kind()) {
    case MixingKind::Uniform:
        out["theta_lo"] = mixing.theta_domain().lo;
        out["theta_hi"] = mixing.theta_domain().hi;
        break;
    case MixingKind::Pareto:
        out["mixing_alpha"] = mixing.shape();
        out["theta_max"] = mixing.theta_domain().hi;
        break;
    case MixingKind::Beta:
    case MixingKind::Weibull:
        out["mixing_alpha"] = mixing.shape();
        break;
    default:
        break;
    }
    out["prior"] = std::string(prior.name());
    if (prior.kind() != PriorKind::UniformInterval) {
        out["prior_shape"] = prior.shape();
        out["prior_rate"] = prior.rate();
    }
    if (prior.kind() != PriorKind::Gamma) {
        out["prior_lo"] = prior.support().lo;
        out["prior_hi"] = prior.support().hi;
    }
    out["sample_sizes"] = cfg.sample_sizes;
    out["replications"] = cfg.replications;
    out["eval_points"] = cfg.eval_points;
    out["r_star"] = cfg.r_star;
    out["rate_constant"] = cfg.rate_constant;
    out["seed"] = cfg.seed;
    // threads is left out: it never changes results, and reports must not
    // depend on it.
    out["k_max"] = cfg.k_max;
    out["theta_grid"] = cfg.theta_grid;
    return out;
}

} // namespace lageb
