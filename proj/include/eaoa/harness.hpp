#pragma once

#include "eaoa/config.hpp"
#include "eaoa/data.hpp"
#include "eaoa/nn.hpp"
#include "eaoa/sampler.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace eaoa::harness {

struct RoundMetrics {
    int round = 0;
    Strategy strategy = Strategy::Eaoa;
    std::uint64_t seed = 0;
    double precision = 0.0;      ///< rP of this round's query
    double k = 0.0;              ///< multiplier used for the query (0 for baselines)
    double test_acc = 0.0;       ///< classifier accuracy after this round's labels
    double detector_acc = 0.0;   ///< (C+1)-way detector accuracy after this round's labels
    std::size_t n_known = 0;     ///< labeled known examples after the query
    std::size_t n_unknown = 0;   ///< labeled unknown examples after the query
    double secs = 0.0;
};

/// Exact column order of the per-round CSV.
inline constexpr const char* kRoundsCsvHeader =
    "round,strategy,seed,rP,k_t,test_acc,detector_acc,n_known,n_unknown,secs";

/// Mutable state of one seeded run. `detector` and `classifier` are always trained
/// on the pool's current labeled data.
struct RunState {
    std::uint64_t seed = 0;
    data::Pool pool;
    sampler::SamplerState sampler;
    nn::Mlp detector;
    nn::Mlp classifier;
    int completed_rounds = 0;
};

data::Pool make_pool(const ExperimentConfig& config, std::uint64_t seed);

/// Build the pool for `seed` and train the round-0 models.
RunState start_run(const ExperimentConfig& config, std::uint64_t seed);
RunState start_run(const ExperimentConfig& config, std::uint64_t seed, data::Pool pool);

/// EU_L, EU_D, their fusion and AU for every unlabeled example.
sampler::ScoreTable score_unlabeled(const data::Pool& pool, const nn::Mlp& detector,
                                    const nn::Mlp& classifier, const ExperimentConfig& config);

/// Softmax entropy per row.
std::vector<double> entropy_scores(const Matrix& logits);
/// Largest known-class logit per row of a (C+1)-way detector output.
std::vector<double> mav_scores(const Matrix& detector_logits);

struct Models {
    const nn::Mlp* detector = nullptr;
    const nn::Mlp* classifier = nullptr;
};

/// Random / Uncertainty / Certainty / MAV selection over the unlabeled pool.
/// Returned indices are positions in pool.unlabeled().
sampler::QuerySet baseline_select(Strategy strategy, const data::Pool& pool, Models models,
                                  std::size_t budget, std::uint64_t seed);

/// One active-learning round: score, select, query the oracle, adapt k, retrain both
/// models on the enlarged labeled set and evaluate them.
RoundMetrics run_round(RunState& state, const ExperimentConfig& config);

using ProgressFn = std::function<void(const RoundMetrics&)>;

/// All rounds for one seed. Stops early when the unlabeled pool is exhausted.
std::vector<RoundMetrics> run_seed(const ExperimentConfig& config, std::uint64_t seed,
                                   const ProgressFn& progress = {},
                                   const std::filesystem::path& snapshot_dir = {});

struct ExperimentResult {
    std::vector<RoundMetrics> rounds;  ///< grouped by seed, in config order
    nlohmann::json summary;
};

std::string rounds_csv(const std::vector<RoundMetrics>& rounds);
std::string curves_csv(const nlohmann::json& summary);
nlohmann::json summarize(const ExperimentConfig& config, const std::vector<RoundMetrics>& rounds);

/// Run every seed (up to `jobs` at once) and, when `out_dir` is non-empty, write
/// rounds.csv, summary.json and curves.csv there.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir = {}, int jobs = 1,
                                const ProgressFn& progress = {});

}  // namespace eaoa::harness
