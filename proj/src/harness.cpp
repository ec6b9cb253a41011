#include "lageb/harness.hpp"

#include "lageb/error.hpp"
#include "lageb/estimator.hpp"
#include "lageb/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace lageb {

namespace {

constexpr std::size_t kPilotSize = 100000;
constexpr double kMaxFailureFraction = 0.10;

double quantile_sorted(const std::vector<double>& v, double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= v.size()) {
        return v.back();
    }
    return v[i] + frac * (v[i + 1] - v[i]);
}

nlohmann::ordered_json default_echo(const StudyConfig& c) {
    nlohmann::ordered_json out;
    out["mixing"] = std::string(c.mixing.name());
    if (c.mixing.shape() > 0.0) {
        out["mixing_alpha"] = c.mixing.shape();
    }
    out["prior"] = std::string(c.prior.name());
    if (c.prior.kind() != PriorKind::UniformInterval) {
        out["prior_shape"] = c.prior.shape();
        out["prior_rate"] = c.prior.rate();
    }
    if (c.prior.kind() != PriorKind::Gamma) {
        out["prior_lo"] = c.prior.support().lo;
        out["prior_hi"] = c.prior.support().hi;
    }
    out["sample_sizes"] = c.sample_sizes;
    out["replications"] = c.replications;
    out["eval_points"] = c.eval_points;
    out["r_star"] = c.r_star;
    out["rate_constant"] = c.rate_constant;
    out["seed"] = c.master_seed;
    return out;
}

int worker_count(int requested, std::size_t tasks) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    n = std::max(n, 1);
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), tasks));
}

} // namespace

void StudyConfig::validate() const {
    if (sample_sizes.empty()) {
        throw InputError("study needs at least one sample size");
    }
    for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
        if (sample_sizes[i] < 1 || (i > 0 && sample_sizes[i] <= sample_sizes[i - 1])) {
            throw InputError("sample sizes must be positive and strictly increasing");
        }
    }
    if (replications < 2) {
        throw InputError("study needs at least 2 replications");
    }
    if (!(r_star > 0.0) || !(rate_constant > 0.0)) {
        throw InputError("r_star and rate_constant must be positive");
    }
    if (!prior_fits_domain(prior, mixing)) {
        throw InputError("prior support is not inside the mixing parameter domain");
    }
    const Interval xs = mixing.x_support();
    for (double y : eval_points) {
        if (!xs.contains(y)) {
            throw InputError("evaluation point " + std::to_string(y) +
                             " is outside the observation support");
        }
    }
}

Fitter scheduled_fitter(const StudyConfig& config) {
    return [mixing = config.mixing, r_star = config.r_star, c = config.rate_constant](
               std::span<const double> data, std::span<const double> eval) {
        const EstimatorConfig cfg = scheduled_config(data.size(), mixing, r_star, c);
        const FittedEstimator fitted = fit(data, mixing, cfg);
        std::vector<double> out;
        out.reserve(eval.size());
        for (double y : eval) {
            out.push_back(predict(fitted, y));
        }
        return out;
    };
}

std::vector<double> simulate(const StudyConfig& config, std::size_t n, std::uint64_t rep) {
    Stream stream = Stream::derive(config.master_seed, n, rep);
    std::vector<double> data(n);
    for (double& x : data) {
        const double theta = config.prior.sample(stream);
        x = config.mixing.sample(theta, stream);
    }
    return data;
}

std::vector<double> run_replication(const StudyConfig& config, std::size_t n,
                                    std::uint64_t rep_index, std::span<const double> eval_points,
                                    std::span<const double> truth, const Fitter& fitter) {
    if (truth.size() != eval_points.size()) {
        throw InputError("oracle values and evaluation points differ in length");
    }
    const std::vector<double> data = simulate(config, n, rep_index);
    const std::vector<double> pred = fitter(data, eval_points);
    if (pred.size() != eval_points.size()) {
        throw InputError("fitter returned the wrong number of predictions");
    }
    std::vector<double> sq(pred.size());
    for (std::size_t j = 0; j < pred.size(); ++j) {
        const double d = pred[j] - truth[j];
        sq[j] = d * d;
        if (!std::isfinite(sq[j])) {
            throw NumericalError("non-finite prediction at y = " + std::to_string(eval_points[j]));
        }
    }
    return sq;
}

std::vector<double> run_replication(const StudyConfig& config, std::size_t n,
                                    std::uint64_t rep_index) {
    if (std::find(config.sample_sizes.begin(), config.sample_sizes.end(), n) ==
        config.sample_sizes.end()) {
        throw InputError("n = " + std::to_string(n) + " is not one of the study sample sizes");
    }
    const std::vector<double> eval =
        config.eval_points.empty()
            ? marginal_quartiles(config.mixing, config.prior, config.master_seed)
            : config.eval_points;
    const BayesOracle oracle(config.prior, config.mixing);
    std::vector<double> truth;
    for (double y : eval) {
        truth.push_back(oracle.bayes_rule(y));
    }
    return run_replication(config, n, rep_index, eval, truth, scheduled_fitter(config));
}

std::vector<double> marginal_quartiles(const MixingModel& mixing, const PriorModel& prior,
                                       std::uint64_t master_seed) {
    StudyConfig pilot;
    pilot.mixing = mixing;
    pilot.prior = prior;
    pilot.master_seed = master_seed;
    std::vector<double> x = simulate(pilot, kPilotSize, 0);
    std::sort(x.begin(), x.end());
    return {quantile_sorted(x, 0.25), quantile_sorted(x, 0.5), quantile_sorted(x, 0.75)};
}

ExperimentReport run_study(const StudyConfig& config) {
    return run_study(config, scheduled_fitter(config));
}

ExperimentReport run_study(const StudyConfig& config, const Fitter& fitter) {
    config.validate();
    const std::vector<double> eval =
        config.eval_points.empty()
            ? marginal_quartiles(config.mixing, config.prior, config.master_seed)
            : config.eval_points;
    const BayesOracle oracle(config.prior, config.mixing);
    std::vector<double> truth;
    for (double y : eval) {
        truth.push_back(oracle.bayes_rule(y));
    }

    const std::size_t reps = static_cast<std::size_t>(config.replications);
    const std::size_t tasks = config.sample_sizes.size() * reps;
    std::vector<std::optional<std::vector<double>>> results(tasks);
    std::vector<std::string> errors(tasks);
    std::atomic<std::size_t> next{0};

    const auto work = [&] {
        for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) {
            const std::size_t n = config.sample_sizes[t / reps];
            const std::uint64_t rep = t % reps;
            try {
                results[t] = run_replication(config, n, rep, eval, truth, fitter);
            } catch (const std::exception& e) {
                errors[t] = e.what();
            }
        }
    };
    const int workers = worker_count(config.threads, tasks);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < workers; ++i) {
            pool.emplace_back(work);
        }
    }

    ExperimentReport report;
    report.schema_version = kReportSchemaVersion;
    report.version = LAGEB_VERSION;
    report.config = config.echo.is_null() ? default_echo(config) : config.echo;
    report.config["eval_points"] = eval;
    report.config["seed"] = config.master_seed;

    std::string first_error;
    for (std::size_t t = 0; t < tasks; ++t) {
        if (!results[t]) {
            ++report.failed_replications;
            if (first_error.empty()) {
                first_error = errors[t];
            }
        }
    }
    if (static_cast<double>(report.failed_replications) >
        kMaxFailureFraction * static_cast<double>(tasks)) {
        throw NumericalError(fmt::format("{} of {} replications failed; first error: {}",
                                         report.failed_replications, tasks, first_error));
    }

    // Reduction in (n, y, rep) order.
    for (std::size_t si = 0; si < config.sample_sizes.size(); ++si) {
        for (std::size_t j = 0; j < eval.size(); ++j) {
            double sum = 0.0;
            int count = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                if (const auto& res = results[si * reps + r]) {
                    sum += (*res)[j];
                    ++count;
                }
            }
            const double mean = sum / count;
            double ss = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                if (const auto& res = results[si * reps + r]) {
                    ss += ((*res)[j] - mean) * ((*res)[j] - mean);
                }
            }
            const double se = count > 1 ? std::sqrt(ss / (count - 1) / count) : 0.0;
            report.rows.push_back({config.sample_sizes[si], eval[j], mean, se, count});
        }
    }
    if (config.sample_sizes.size() >= 3) {
        report.slopes = estimate_rate(report, config.r_star, config.mixing.beta_exponent());
    }
    return report;
}

SlopeFit ols_slope(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) {
        throw InputError("slope fit needs at least two paired points");
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw InputError("slope fit needs at least two distinct x values");
    }
    SlopeFit out;
    out.slope = sxy / sxx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - my - out.slope * (xs[i] - mx);
            rss += r * r;
        }
        out.se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return out;
}

RateEstimate estimate_rate(const ExperimentReport& report, double r_star, double beta_exponent) {
    RateEstimate out;
    out.theoretical = theoretical_rate(r_star, beta_exponent);

    std::vector<double> ys_order;
    for (const auto& row : report.rows) {
        if (std::find(ys_order.begin(), ys_order.end(), row.y) == ys_order.end()) {
            ys_order.push_back(row.y);
        }
    }
    std::size_t sizes = 0;
    {
        std::vector<std::size_t> ns;
        for (const auto& row : report.rows) {
            if (std::find(ns.begin(), ns.end(), row.n) == ns.end()) {
                ns.push_back(row.n);
            }
        }
        sizes = ns.size();
    }
    if (sizes < 3) {
        throw InputError("rate estimation needs at least 3 sample sizes");
    }

    // Pooled fit with one intercept per point: regress the within-point
    // deviations of log mse on those of log n.
    double sxx = 0.0;
    double sxy = 0.0;
    std::vector<std::vector<double>> lx_all;
    std::vector<std::vector<double>> ly_all;
    std::size_t total = 0;
    for (double y : ys_order) {
        std::vector<double> lx;
        std::vector<double> ly;
        for (const auto& row : report.rows) {
            if (row.y != y) {
                continue;
            }
            if (!(row.mse > 0.0)) {
                ++out.excluded_rows;
                continue;
            }
            lx.push_back(std::log(static_cast<double>(row.n)));
            ly.push_back(std::log(row.mse));
        }
        if (lx.size() < 2) {
            continue;
        }
        PointSlope ps{y, ols_slope(lx, ly)};
        if (lx.size() < 3) {
            ps.fit.se = std::nan("");
        }
        out.per_y.push_back(ps);
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= static_cast<double>(lx.size());
        my /= static_cast<double>(ly.size());
        for (std::size_t i = 0; i < lx.size(); ++i) {
            lx[i] -= mx;
            ly[i] -= my;
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        total += lx.size();
        lx_all.push_back(std::move(lx));
        ly_all.push_back(std::move(ly));
    }
    if (!(sxx > 0.0)) {
        throw NumericalError("no usable rows for rate estimation");
    }
    out.pooled.slope = sxy / sxx;
    const std::size_t dof = total > lx_all.size() + 1 ? total - lx_all.size() - 1 : 0;
    if (dof > 0) {
        double rss = 0.0;
        for (std::size_t g = 0; g < lx_all.size(); ++g) {
            for (std::size_t i = 0; i < lx_all[g].size(); ++i) {
                const double r = ly_all[g][i] - out.pooled.slope * lx_all[g][i];
                rss += r * r;
            }
        }
        out.pooled.se = std::sqrt(rss / static_cast<double>(dof) / sxx);
    }
    return out;
}

nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = report.schema_version;
    doc["version"] = report.version;
    doc["config"] = report.config;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["n"] = r.n;
        row["y"] = r.y;
        row["mse"] = r.mse;
        row["se"] = r.se;
        row["reps"] = r.reps;
        rows.push_back(row);
    }
    doc["rows"] = rows;
    if (report.slopes) {
        nlohmann::ordered_json slopes;
        auto per_y = nlohmann::ordered_json::array();
        for (const auto& p : report.slopes->per_y) {
            nlohmann::ordered_json e;
            e["y"] = p.y;
            e["slope"] = p.fit.slope;
            e["se"] = p.fit.se;
            per_y.push_back(e);
        }
        slopes["per_y"] = per_y;
        slopes["pooled"] = report.slopes->pooled.slope;
        slopes["pooled_se"] = report.slopes->pooled.se;
        slopes["theoretical"] = report.slopes->theoretical;
        slopes["excluded_rows"] = report.slopes->excluded_rows;
        doc["slopes"] = slopes;
    }
    doc["failed_replications"] = report.failed_replications;
    return doc;
}

ExperimentReport report_from_json(const nlohmann::ordered_json& doc) {
    try {
        ExperimentReport out;
        out.schema_version = doc.at("schema_version").get<int>();
        if (out.schema_version != kReportSchemaVersion) {
            throw InputError("unsupported report schema_version");
        }
        out.version = doc.at("version").get<std::string>();
        out.config = doc.at("config");
        for (const auto& r : doc.at("rows")) {
            out.rows.push_back({r.at("n").get<std::size_t>(), r.at("y").get<double>(),
                                r.at("mse").get<double>(), r.at("se").get<double>(),
                                r.at("reps").get<int>()});
        }
        if (doc.contains("slopes")) {
            const auto& s = doc.at("slopes");
            RateEstimate est;
            for (const auto& p : s.at("per_y")) {
                const auto num = [](const nlohmann::ordered_json& v) {
                    return v.is_null() ? std::nan("") : v.get<double>();
                };
                est.per_y.push_back({p.at("y").get<double>(), {num(p.at("slope")), num(p.at("se"))}});
            }
            est.pooled.slope = s.at("pooled").get<double>();
            est.pooled.se = s.at("pooled_se").get<double>();
            est.theoretical = s.at("theoretical").get<double>();
            est.excluded_rows = s.at("excluded_rows").get<int>();
            out.slopes = est;
        }
        out.failed_replications = doc.at("failed_replications").get<int>();
        return out;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw InputError(std::string("malformed report: ") + e.what());
    }
}

std::string report_to_string(const ExperimentReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        return report_to_json(report).dump(2) + "\n";
    }
    std::string out = "n,y,mse,se,reps\n";
    for (const auto& r : report.rows) {
        out += fmt::format("{},{:.17g},{:.17g},{:.17g},{}\n", r.n, r.y, r.mse, r.se, r.reps);
    }
    if (report.slopes) {
        out += fmt::format("# pooled_slope={:.17g} pooled_se={:.17g} theoretical={:.17g}",
                           report.slopes->pooled.slope, report.slopes->pooled.se,
                           report.slopes->theoretical);
        for (const auto& p : report.slopes->per_y) {
            out += fmt::format(" slope(y={:.17g})={:.17g}", p.y, p.fit.slope);
        }
        out += "\n";
    } else {
        out += "# slopes omitted: fewer than 3 sample sizes\n";
    }
    return out;
}

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
    const std::string text = report_to_string(report, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot open " + path.string() + " for writing");
    }
    out << text;
    out.close();
    if (!out) {
        throw InputError("failed writing " + path.string());
    }
}

std::vector<RiskRow> rows_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<RiskRow> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::string f[5];
        for (auto& field : f) {
            if (!std::getline(ls, field, ',')) {
                throw InputError("malformed CSV row: " + line);
            }
        }
        rows.push_back({std::stoull(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                        std::stoi(f[4])});
    }
    return rows;
}

} // namespace lageb
