#pragma once

#include "eaoa/data.hpp"
#include "eaoa/energy.hpp"
#include "eaoa/nn.hpp"
#include "eaoa/score_fusion.hpp"
#include "eaoa/training.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace eaoa {

enum class Strategy { Random, Uncertainty, Certainty, Mav, Eaoa };

std::string to_string(Strategy strategy);
Strategy parse_strategy(std::string_view name);
const std::vector<Strategy>& all_strategies();

/// Everything needed to reproduce an experiment. Serialized as nested JSON; see
/// default_config_json() for the key layout.
struct ExperimentConfig {
    /// Empty means synthetic data from `synthetic`.
    std::string dataset_path;
    data::OpenSetSpec synthetic;

    Strategy strategy = Strategy::Eaoa;
    int rounds = 10;
    int budget = 50;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    bool write_snapshots = false;
    /// Populate the `secs` column. Off by default so reruns are byte-identical.
    bool record_wall_clock = false;

    double target_precision = 0.6;
    double k1 = 5.0;
    double amplitude = 1.0;
    double threshold = 0.05;

    std::size_t knn_k = 250;
    double arrow_smoothing = 1.0;

    energy::MarginConfig margin;
    fusion::EmOptions em;

    training::ModelTemplate detector_arch;
    nn::SgdConfig detector_sgd;
    training::ModelTemplate classifier_arch;
    nn::SgdConfig classifier_sgd;

    void validate() const;
    nlohmann::json to_json() const;
    /// Strict: every key must exist in the default layout with a compatible type.
    static ExperimentConfig from_json(const nlohmann::json& j);
};

nlohmann::json default_config_json();

/// Recursively overlay `patch` onto `base`. Unknown keys and type changes are
/// errors naming the dotted key.
void merge_config(nlohmann::json& base, const nlohmann::json& patch);

/// Apply `dotted.key=value`. The value is parsed as JSON when possible, otherwise
/// taken as a string.
void apply_override(nlohmann::json& config, std::string_view assignment);
void set_config_value(nlohmann::json& config, std::string_view dotted_key,
                      const nlohmann::json& value);

/// Short ablation axis names (tP, K, lambda_e, ...) to dotted config keys; dotted
/// keys pass through.
std::string resolve_axis(std::string_view axis);

/// Defaults, then the file at `path` (if non-empty), then overrides.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

}  // namespace eaoa
