#pragma once

#include "lageb/mixing.hpp"
#include "lageb/oracle.hpp"
#include "lageb/prior.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lageb {

struct StudyConfig {
    MixingModel mixing = MixingModel::exponential();
    PriorModel prior = PriorModel::gamma(2.0, 1.0);
    std::vector<std::size_t> sample_sizes;
    int replications = 2;
    std::vector<double> eval_points; // empty: marginal quartiles of a pilot sample
    double r_star = 1.0;
    double rate_constant = 1.0;
    std::uint64_t master_seed = 0;
    int threads = 0;
    /// Config echo written into reports; built from the other fields when null.
    nlohmann::ordered_json echo;

    void validate() const;
};

/// Predictions at the evaluation points from one simulated dataset.
using Fitter = std::function<std::vector<double>(std::span<const double> data,
                                                 std::span<const double> eval_points)>;

/// Default fitter: truncation level and ridge from the schedules for N = data.size().
Fitter scheduled_fitter(const StudyConfig& config);

/// theta_i ~ g, X_i ~ q(. | theta_i) from the stream keyed by (master_seed, n, rep).
std::vector<double> simulate(const StudyConfig& config, std::size_t n, std::uint64_t rep);

/// Squared errors (t_hat(y) - t(y))^2 over the evaluation points, given the
/// oracle values t(y).
std::vector<double> run_replication(const StudyConfig& config, std::size_t n,
                                    std::uint64_t rep_index, std::span<const double> eval_points,
                                    std::span<const double> truth, const Fitter& fitter);

/// Same, with the scheduled fitter and oracle values computed on the spot.
std::vector<double> run_replication(const StudyConfig& config, std::size_t n,
                                    std::uint64_t rep_index);

/// Quartiles of the marginal estimated from a 10^5-draw pilot sample (stream key n = 0).
std::vector<double> marginal_quartiles(const MixingModel& mixing, const PriorModel& prior,
                                       std::uint64_t master_seed);

struct RiskRow {
    std::size_t n = 0;
    double y = 0.0;
    double mse = 0.0;
    double se = 0.0;
    int reps = 0;
};

struct SlopeFit {
    double slope = 0.0;
    double se = 0.0;
};

struct PointSlope {
    double y = 0.0;
    SlopeFit fit;
};

struct RateEstimate {
    std::vector<PointSlope> per_y;
    SlopeFit pooled;
    double theoretical = 0.0;
    int excluded_rows = 0; // rows with zero risk, left out of the regression
};

struct ExperimentReport {
    int schema_version = 1;
    std::string version;
    nlohmann::ordered_json config;
    std::vector<RiskRow> rows; // ordered by n, then by evaluation point
    std::optional<RateEstimate> slopes;
    int failed_replications = 0;
};

/// Runs every (n, rep) pair on a pool of worker threads and aggregates in a
/// fixed order, so the report does not depend on scheduling. Throws
/// NumericalError when more than 10% of the replications fail.
ExperimentReport run_study(const StudyConfig& config);
ExperimentReport run_study(const StudyConfig& config, const Fitter& fitter);

/// Least squares fit of log(mse) on log(n), per evaluation point and pooled
/// with a separate intercept per point. Requires at least 3 sample sizes.
RateEstimate estimate_rate(const ExperimentReport& report, double r_star, double beta_exponent);

/// Ordinary least squares slope of ys on xs with its standard error.
SlopeFit ols_slope(std::span<const double> xs, std::span<const double> ys);

enum class ReportFormat { Json, Csv };

std::string report_to_string(const ExperimentReport& report, ReportFormat format);
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path);

nlohmann::ordered_json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::ordered_json& doc);
/// Rows of a CSV report (the trailing comment line is skipped).
std::vector<RiskRow> rows_from_csv(const std::string& text);

inline constexpr int kReportSchemaVersion = 1;

} // namespace lageb
