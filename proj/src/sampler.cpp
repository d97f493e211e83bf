#include "eaoa/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace eaoa::sampler {

namespace {

// Slack on the dead-band comparison so that |tP - rP| == z is not flipped by rounding.
constexpr double kDeadbandSlack = 1e-12;

template <typename Before>
std::vector<std::size_t> top_positions(std::span<const double> scores, std::size_t n,
                                       Before before) {
    n = std::min(n, scores.size());
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) {
                              return before(scores[a], scores[b]);
                          }
                          return a < b;
                      });
    order.resize(n);
    return order;
}

}  // namespace

void ScoreTable::validate() const {
    const std::size_t n = eu_fused.size();
    if (au_prob.size() != n) {
        throw ShapeError("ScoreTable: eu_fused has " + std::to_string(n) + " entries, au_prob " +
                         std::to_string(au_prob.size()));
    }
    for (const auto* column : {&eu_learning, &eu_data, &eu_learning_prob, &eu_data_prob, &au}) {
        if (!column->empty() && column->size() != n) {
            throw ShapeError("ScoreTable: column lengths differ");
        }
    }
}

void SamplerState::validate() const {
    if (!(k >= 1.0) || !std::isfinite(k)) {
        throw ValidationError("sampler.k1 must be a finite number >= 1");
    }
    if (!(target_precision > 0.0 && target_precision < 1.0)) {
        throw ValidationError("sampler.tP must lie in (0, 1)");
    }
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
        throw ValidationError("sampler.a must be positive");
    }
    if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
        throw ValidationError("sampler.z must be non-negative");
    }
}

std::vector<std::size_t> lowest(std::span<const double> scores, std::size_t n) {
    return top_positions(scores, n, std::less<double>{});
}

std::vector<std::size_t> highest(std::span<const double> scores, std::size_t n) {
    return top_positions(scores, n, std::greater<double>{});
}

std::size_t candidate_count(double k, std::size_t budget, std::size_t pool_size) {
    const double raw = std::floor(k * static_cast<double>(budget));
    std::size_t count = raw >= static_cast<double>(pool_size) ? pool_size
                                                               : static_cast<std::size_t>(raw);
    count = std::max(count, budget);
    return std::min(count, pool_size);
}

QuerySet select(std::span<const double> eu, std::span<const double> au, double k,
                std::size_t budget) {
    if (eu.empty()) {
        throw ValidationError("select: unlabeled pool is empty");
    }
    if (eu.size() != au.size()) {
        throw ShapeError("select: EU and AU score lengths differ");
    }
    if (budget == 0) {
        throw ValidationError("select: budget must be positive");
    }
    budget = std::min(budget, eu.size());

    QuerySet out;
    out.stage1_indices = lowest(eu, candidate_count(k, budget, eu.size()));

    // AU ties break on pool position, not on candidate rank.
    std::vector<std::size_t> by_position = out.stage1_indices;
    std::sort(by_position.begin(), by_position.end());
    std::vector<double> candidate_au(by_position.size());
    for (std::size_t i = 0; i < by_position.size(); ++i) {
        candidate_au[i] = au[by_position[i]];
    }
    for (std::size_t pos : highest(candidate_au, budget)) {
        out.indices.push_back(by_position[pos]);
    }
    return out;
}

QuerySet select(const ScoreTable& scores, const SamplerState& state, std::size_t budget) {
    scores.validate();
    return select(scores.eu_fused, scores.au_prob, state.k, budget);
}

void update_k(SamplerState& state, double realized_precision, int round) {
    if (!(realized_precision >= 0.0 && realized_precision <= 1.0)) {
        throw ValidationError("update_k: realized precision must lie in [0, 1]");
    }
    state.history.push_back({round, state.k, realized_precision});
    const double diff = realized_precision - state.target_precision;
    if (diff > state.threshold + kDeadbandSlack) {
        state.k += state.amplitude;
    } else if (-diff > state.threshold + kDeadbandSlack) {
        state.k -= state.amplitude;
    }
    state.k = std::max(state.k, 1.0);
}

}  // namespace eaoa::sampler
