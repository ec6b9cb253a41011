#pragma once

#include "lageb/mixing.hpp"
#include "lageb/prior.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lageb {

/// Flat experiment description shared by every CLI subcommand. Unset optional
/// fields fall back to the family defaults when the models are built.
struct ExperimentConfig {
    std::string mixing = "exponential";
    std::optional<double> mixing_alpha;
    std::optional<double> theta_lo;
    std::optional<double> theta_hi;
    std::optional<double> theta_max;

    std::optional<std::string> prior;
    double prior_shape = 2.0;
    double prior_rate = 1.0;
    std::optional<double> prior_lo;
    std::optional<double> prior_hi;

    std::vector<std::size_t> sample_sizes{1000, 10000, 100000};
    int replications = 50;
    std::vector<double> eval_points; // empty: marginal quartiles
    double r_star = 1.0;
    double rate_constant = 1.0;
    std::uint64_t seed = 20240601;
    int threads = 0; // 0: hardware concurrency

    int k_max = 8;
    std::vector<double> theta_grid; // empty: family default grid
};

struct ConfigKey {
    std::string_view name;
    std::string_view type;
    std::string_view fallback;
    std::string_view help;
};

/// Every recognised key, in echo order.
const std::vector<ConfigKey>& config_keys();

/// Text block listing every key, used by --help.
std::string config_keys_help();

/// Throws InputError on unknown keys, wrong types or out-of-range values.
ExperimentConfig config_from_json(const nlohmann::json& doc);
/// Applies the keys present in `doc` on top of `base`.
void apply_config(ExperimentConfig& base, const nlohmann::json& doc);

/// Parses "key = value" lines ('#' comments, values in JSON syntax) into a flat
/// JSON object. Section headers and duplicate keys are rejected.
nlohmann::json parse_key_value(std::string_view text);

/// Reads a .json file, or a key-value file for any other extension.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// The configuration as it is echoed into reports: family defaults resolved,
/// keys that do not apply to the chosen models omitted.
nlohmann::ordered_json config_echo(const ExperimentConfig& cfg);

MixingModel make_mixing(const ExperimentConfig& cfg);
MixingModel make_mixing(const ExperimentConfig& cfg, std::string_view name);
PriorModel make_prior(const ExperimentConfig& cfg, const MixingModel& mixing);

/// All six family names in catalog order.
const std::vector<std::string>& mixing_names();

} // namespace lageb
