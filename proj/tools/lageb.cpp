// Command-line front end: fit, predict, verify-u, study, oracle-compare.

#include "lageb/config.hpp"
#include "lageb/error.hpp"
#include "lageb/estimator.hpp"
#include "lageb/harness.hpp"
#include "lageb/mixing.hpp"
#include "lageb/oracle.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace lageb;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerification = 4;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::string mixing;
    std::optional<double> mixing_alpha;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "experiment file (.json, or key = value lines)");
    cmd->add_option("--set", o.sets, "override one config key, KEY=VALUE (repeatable)");
    cmd->add_option("--mixing", o.mixing, "shorthand for --set mixing=NAME");
    cmd->add_option("--mixing-alpha", o.mixing_alpha, "shorthand for --set mixing_alpha=VALUE");
    cmd->add_option("--seed", o.seed, "master seed override");
    cmd->add_option("--threads", o.threads, "worker thread override");
}

// "key=value" with the value in JSON syntax; a bare word is taken as a string.
nlohmann::json parse_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw InputError("--set expects KEY=VALUE, got '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
        return parse_key_value(key + " = " + value);
    } catch (const InputError&) {
        return parse_key_value(key + " = " + nlohmann::json(value).dump());
    }
}

// Builds the config; `allow_all` lets --mixing take the value "all".
ExperimentConfig load_config(const CommonOptions& o, bool allow_all = false) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) {
        apply_config(cfg, read_config_file(o.config_path));
    }
    for (const auto& kv : o.sets) {
        apply_config(cfg, parse_override(kv));
    }
    if (!o.mixing.empty() && !(allow_all && o.mixing == "all")) {
        apply_config(cfg, {{"mixing", o.mixing}});
    }
    if (o.mixing_alpha) {
        apply_config(cfg, {{"mixing_alpha", *o.mixing_alpha}});
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.threads) {
        if (*o.threads < 0) {
            throw InputError("--threads must be >= 0");
        }
        cfg.threads = *o.threads;
    }
    return cfg;
}

std::vector<double> read_data_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open data file " + path);
    }
    std::vector<double> data;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        double v = 0.0;
        if (!(ls >> v)) {
            std::string rest;
            if (std::istringstream(line) >> rest) {
                throw InputError(fmt::format("{}:{}: not a number", path, lineno));
            }
            continue;
        }
        std::string extra;
        if (ls >> extra) {
            throw InputError(fmt::format("{}:{}: expected one value per line", path, lineno));
        }
        if (!std::isfinite(v) || !(v > 0.0)) {
            throw InputError(fmt::format("{}:{}: observations must be positive", path, lineno));
        }
        data.push_back(v);
    }
    if (data.empty()) {
        throw InputError("data file " + path + " has no observations");
    }
    return data;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) {
            continue;
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(item.substr(b), &used);
            if (item.find_first_not_of(" \t", b + used) != std::string::npos) {
                throw std::invalid_argument(item);
            }
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw InputError("cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

FittedEstimator read_estimator(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open estimator file " + path);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed estimator file " + path + ": " + e.what());
    }
    return estimator_from_json(doc);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) {
        throw InputError("cannot write " + path);
    }
}

// fit ----------------------------------------------------------------------

struct FitOptions {
    CommonOptions common;
    std::string data_path;
    std::string output;
    std::optional<int> m;
    std::optional<double> delta;
};

int cmd_fit(const FitOptions& o) {
    const ExperimentConfig cfg = load_config(o.common);
    const MixingModel model = make_mixing(cfg);
    const std::vector<double> data = read_data_file(o.data_path);
    const Interval xs = model.x_support();
    for (double x : data) {
        if (!xs.contains(x)) {
            throw InputError(fmt::format("observation {} is outside the {} support", x, model.name()));
        }
    }
    EstimatorConfig ec = scheduled_config(data.size(), model, cfg.r_star, cfg.rate_constant);
    if (o.m) {
        ec.basis.M = *o.m;
        ec.delta = delta_of(data.size(), ec.basis.M);
    }
    if (o.delta) {
        ec.delta = *o.delta;
    }
    const FittedEstimator fitted = fit(data, model, ec);
    fmt::print(stderr, "M={} delta={:.6g} N={}\n", fitted.basis.M, fitted.delta_used, fitted.n_obs);
    write_text(o.output, to_json(fitted).dump(2) + "\n");
    return kExitOk;
}

// predict ------------------------------------------------------------------

struct PredictOptions {
    std::string estimator_path;
    std::string y;
    std::string output;
};

int cmd_predict(const PredictOptions& o) {
    const FittedEstimator fitted = read_estimator(o.estimator_path);
    std::string out = "y,t_hat\n";
    for (double y : parse_list(o.y)) {
        if (!std::isfinite(y) || y < 0.0) {
            throw InputError(fmt::format("query point {} is outside (0, inf)", y));
        }
        out += fmt::format("{:.17g},{:.17g}\n", y, predict(fitted, y));
    }
    write_text(o.output, out);
    return kExitOk;
}

// verify-u -----------------------------------------------------------------

struct VerifyOptions {
    CommonOptions common;
    std::optional<int> k_max;
    std::string theta_grid;
    bool flip_sign = false;
    double tol = 1e-6;
    std::string output;
};

int cmd_verify_u(const VerifyOptions& o) {
    ExperimentConfig cfg = load_config(o.common, true);
    if (o.k_max) {
        apply_config(cfg, {{"k_max", *o.k_max}});
    }
    if (!o.theta_grid.empty()) {
        cfg.theta_grid = parse_list(o.theta_grid);
    }
    std::vector<std::string> families;
    if (o.common.mixing == "all") {
        families = mixing_names();
    } else {
        families.push_back(cfg.mixing);
    }
    // Build every model first so a bad shape fails before any quadrature runs.
    std::vector<MixingModel> models;
    for (const auto& name : families) {
        models.push_back(make_mixing(cfg, name));
    }
    const double sign = o.flip_sign ? -1.0 : 1.0;
    std::string out = "mixing,k,theta,residual\n";
    double worst = 0.0;
    int breaches = 0;
    for (const auto& model : models) {
        const std::vector<double> grid = cfg.theta_grid.empty() ? default_theta_grid(model) : cfg.theta_grid;
        for (double theta : grid) {
            model.check_theta(theta);
        }
        for (int k = 0; k <= cfg.k_max; ++k) {
            for (double theta : grid) {
                const double r = verify_u_identity(model, k, theta, sign);
                worst = std::max(worst, r);
                if (!(r <= o.tol)) {
                    ++breaches;
                }
                out += fmt::format("{},{},{:.17g},{:.6e}\n", model.name(), k, theta, r);
            }
        }
    }
    write_text(o.output, out);
    fmt::print(stderr, "max residual {:.3e}, {} above {:.1e}\n", worst, breaches, o.tol);
    return breaches > 0 ? kExitVerification : kExitOk;
}

// study --------------------------------------------------------------------

struct StudyOptions {
    CommonOptions common;
    std::string out_prefix;
};

int cmd_study(const StudyOptions& o) {
    const ExperimentConfig cfg = load_config(o.common);
    StudyConfig sc;
    sc.mixing = make_mixing(cfg);
    sc.prior = make_prior(cfg, sc.mixing);
    sc.sample_sizes = cfg.sample_sizes;
    sc.replications = cfg.replications;
    sc.eval_points = cfg.eval_points;
    sc.r_star = cfg.r_star;
    sc.rate_constant = cfg.rate_constant;
    sc.master_seed = cfg.seed;
    sc.threads = cfg.threads;
    sc.echo = config_echo(cfg);
    const ExperimentReport report = run_study(sc);
    emit_report(report, ReportFormat::Json, o.out_prefix + ".json");
    emit_report(report, ReportFormat::Csv, o.out_prefix + ".csv");
    for (const auto& r : report.rows) {
        fmt::print(stderr, "n={} y={:.4g} mse={:.4e} se={:.2e} reps={}\n", r.n, r.y, r.mse, r.se, r.reps);
    }
    if (report.slopes) {
        if (report.slopes->excluded_rows > 0) {
            fmt::print(stderr, "warning: {} zero-risk rows left out of the slope fit\n",
                       report.slopes->excluded_rows);
        }
        fmt::print(stderr, "pooled slope {:.4f} (se {:.4f}), theoretical {:.4f}\n",
                   report.slopes->pooled.slope, report.slopes->pooled.se, report.slopes->theoretical);
    }
    if (report.failed_replications > 0) {
        fmt::print(stderr, "warning: {} replications failed\n", report.failed_replications);
    }
    return kExitOk;
}

// oracle-compare -----------------------------------------------------------

struct CompareOptions {
    CommonOptions common;
    std::string estimator_path;
    std::optional<std::string> y;
    std::string output;
};

int cmd_oracle_compare(const CompareOptions& o) {
    const ExperimentConfig cfg = load_config(o.common);
    const MixingModel mixing = make_mixing(cfg);
    const PriorModel prior = make_prior(cfg, mixing);
    const FittedEstimator fitted = read_estimator(o.estimator_path);
    if (fitted.basis.a != mixing.recommended_a()) {
        throw InputError(fmt::format("estimator basis a = {} does not match the {} model's a = {}",
                                     fitted.basis.a, mixing.name(), mixing.recommended_a()));
    }
    const std::vector<double> ys = o.y ? parse_list(*o.y) : cfg.eval_points;
    const BayesOracle oracle(prior, mixing);
    const Interval xs = mixing.x_support();
    std::string out = "y,t_hat,t,abs_diff,flag\n";
    double max_diff = 0.0;
    int flagged = 0;
    for (double y : ys) {
        std::string flag;
        if (!xs.contains(y)) {
            flag = "outside_support";
        } else if (oracle.marginal_density(y) < BayesOracle::kMinMarginal) {
            flag = "zero_marginal";
        }
        if (!flag.empty()) {
            ++flagged;
            fmt::print(stderr, "warning: y = {} skipped ({})\n", y, flag);
            out += fmt::format("{:.17g},,,,{}\n", y, flag);
            continue;
        }
        const double t_hat = predict(fitted, y);
        const double t = oracle.bayes_rule(y);
        const double diff = std::abs(t_hat - t);
        max_diff = std::max(max_diff, diff);
        out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},\n", y, t_hat, t, diff);
    }
    write_text(o.output, out);
    fmt::print(stderr, "max_abs_diff={:.17g} rows={} flagged={}\n", max_diff, ys.size(), flagged);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laguerre-series empirical Bayes estimation"};
    app.set_version_flag("--version", std::string(LAGEB_VERSION));
    app.require_subcommand(1);
    const std::string keys = config_keys_help();
    app.footer(keys + "\nExit codes: 0 ok, 2 input error, 3 numerical error, 4 verification failure.");

    FitOptions fit_o;
    auto* fit_cmd = app.add_subcommand("fit", "fit an estimator to a data file (one value per line)");
    add_common(fit_cmd, fit_o.common);
    fit_cmd->add_option("--data", fit_o.data_path, "data file")->required();
    fit_cmd->add_option("-o,--output", fit_o.output, "estimator JSON path (default stdout)");
    fit_cmd->add_option("--m", fit_o.m, "truncation level (default: schedule)")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--delta", fit_o.delta, "ridge shift (default: M / sqrt(N))")->check(CLI::PositiveNumber);

    PredictOptions pred_o;
    auto* pred_cmd = app.add_subcommand("predict", "evaluate a fitted estimator");
    pred_cmd->add_option("--estimator", pred_o.estimator_path, "estimator JSON")->required();
    pred_cmd->add_option("--y", pred_o.y, "comma-separated query points")->required();
    pred_cmd->add_option("-o,--output", pred_o.output, "CSV path (default stdout)");

    VerifyOptions ver_o;
    auto* ver_cmd = app.add_subcommand("verify-u", "check the U_k identities by quadrature");
    add_common(ver_cmd, ver_o.common);
    ver_cmd->add_option("--k-max", ver_o.k_max, "highest order (config k_max)");
    ver_cmd->add_option("--theta-grid", ver_o.theta_grid, "comma-separated theta values");
    ver_cmd->add_flag("--flip-sign", ver_o.flip_sign, "negate U_k (checker self-test)");
    ver_cmd->add_option("--tol", ver_o.tol, "residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    ver_cmd->add_option("-o,--output", ver_o.output, "CSV path (default stdout)");
    ver_cmd->footer("--mixing also accepts 'all'.");

    StudyOptions study_o;
    auto* study_cmd = app.add_subcommand("study", "Monte Carlo risk study");
    add_common(study_cmd, study_o.common);
    study_cmd->add_option("--out", study_o.out_prefix, "writes PREFIX.json and PREFIX.csv")->required();

    CompareOptions cmp_o;
    auto* cmp_cmd = app.add_subcommand("oracle-compare", "compare an estimator with the Bayes rule");
    add_common(cmp_cmd, cmp_o.common);
    cmp_cmd->add_option("--estimator", cmp_o.estimator_path, "estimator JSON")->required();
    cmp_cmd->add_option("--y", cmp_o.y, "comma-separated query points (default: config eval_points)");
    cmp_cmd->add_option("-o,--output", cmp_o.output, "CSV path (default stdout)");

    for (auto* cmd : {fit_cmd, ver_cmd, study_cmd, cmp_cmd}) {
        if (cmd->get_footer().empty()) {
            cmd->footer(keys);
        } else {
            cmd->footer(cmd->get_footer() + "\n\n" + keys);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit_o);
        if (*pred_cmd) return cmd_predict(pred_o);
        if (*ver_cmd) return cmd_verify_u(ver_o);
        if (*study_cmd) return cmd_study(study_o);
        if (*cmp_cmd) return cmd_oracle_compare(cmp_o);
    } catch (const InputError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitInput;
    } catch (const NumericalError& e) {
        fmt::print(stderr, "numerical error: {}\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitNumerical;
    }
    return kExitInput;
}
