#pragma once

#include "eaoa/common.hpp"

#include <span>
#include <vector>

namespace eaoa::sampler {

/// Per-unlabeled-example scores for one round. Index i refers to the i-th entry of
/// the unlabeled pool at scoring time.
struct ScoreTable {
    std::vector<double> eu_learning;       ///< detector energy score
    std::vector<double> eu_data;           ///< reverse-kNN energy score
    std::vector<double> eu_learning_prob;  ///< mixture posterior of eu_learning
    std::vector<double> eu_data_prob;      ///< mixture posterior of eu_data
    std::vector<double> eu_fused;          ///< eu_learning_prob * eu_data_prob
    std::vector<double> au;                ///< classifier aleatoric score
    std::vector<double> au_prob;           ///< mixture posterior of au

    std::size_t size() const { return eu_fused.size(); }
    void validate() const;
};

struct KHistoryEntry {
    int round = 0;
    double k = 0.0;  ///< multiplier used for the round's selection
    double realized_precision = 0.0;
};

/// Candidate-set multiplier k_t and its feedback controller.
struct SamplerState {
    double k = 5.0;
    double target_precision = 0.6;
    double amplitude = 1.0;
    double threshold = 0.05;
    std::vector<KHistoryEntry> history;

    void validate() const;
};

struct QuerySet {
    std::vector<std::size_t> indices;        ///< queried positions, in selection order
    std::vector<std::size_t> stage1_indices; ///< candidate positions, in selection order
};

/// Positions of the `n` smallest scores, ascending, ties to the lower position.
std::vector<std::size_t> lowest(std::span<const double> scores, std::size_t n);
/// Positions of the `n` largest scores, descending, ties to the lower position.
std::vector<std::size_t> highest(std::span<const double> scores, std::size_t n);

/// floor(k * budget) clamped to [budget, pool_size].
std::size_t candidate_count(double k, std::size_t budget, std::size_t pool_size);

/// Two-stage selection: the candidate_count() lowest eu_fused, then the `budget`
/// highest au_prob among them.
QuerySet select(const ScoreTable& scores, const SamplerState& state, std::size_t budget);

/// Raw-score variant used by tests and by callers without a ScoreTable.
QuerySet select(std::span<const double> eu, std::span<const double> au, double k,
                std::size_t budget);

/// Move k by +a / -a when realized precision is above / below target by more than z,
/// clamp to k >= 1, and append to the history.
void update_k(SamplerState& state, double realized_precision, int round = 0);

}  // namespace eaoa::sampler
