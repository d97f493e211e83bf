#include "eaoa/score_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace eaoa::fusion {

namespace {

double log_normal(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void order_components(Gmm1d& g) { g.low_component = g.means[0] <= g.means[1] ? 0 : 1; }

double mean_log_likelihood(const Gmm1d& g, std::span<const double> xs) {
    double total = 0.0;
    for (double x : xs) {
        total += g.log_density(x);
    }
    return total / static_cast<double>(xs.size());
}

}  // namespace

std::array<double, 2> Gmm1d::responsibilities(double score) const {
    const double a = std::log(weights[0]) + log_normal(score, means[0], variances[0]);
    const double b = std::log(weights[1]) + log_normal(score, means[1], variances[1]);
    const double m = std::max(a, b);
    const double ea = std::exp(a - m);
    const double eb = std::exp(b - m);
    const double s = ea + eb;
    std::array<double, 2> by_index{ea / s, eb / s};
    return {by_index[static_cast<std::size_t>(low_component)],
            by_index[static_cast<std::size_t>(high_component())]};
}

double Gmm1d::log_density(double score) const {
    const double a = std::log(weights[0]) + log_normal(score, means[0], variances[0]);
    const double b = std::log(weights[1]) + log_normal(score, means[1], variances[1]);
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

GmmFit fit_gmm(std::span<const double> scores, const EmOptions& options) {
    if (scores.size() < 4) {
        throw DegenerateScores("fit_gmm: need at least 4 scores, got " +
                               std::to_string(scores.size()));
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw ValidationError("fit_gmm: score " + std::to_string(i) + " is not finite");
        }
    }
    if (options.max_iters <= 0 || !(options.tol >= 0.0) || !(options.variance_floor > 0.0)) {
        throw ValidationError("fit_gmm: invalid EM options");
    }

    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw DegenerateScores("fit_gmm: all scores are identical");
    }

    const auto n = static_cast<double>(scores.size());
    double mean = 0.0;
    for (double x : scores) {
        mean += x;
    }
    mean /= n;
    double var = 0.0;
    for (double x : scores) {
        var += (x - mean) * (x - mean);
    }
    var = std::max(var / n, options.variance_floor);

    GmmFit fit;
    Gmm1d& g = fit.model;
    g.means = {quantile(sorted, 0.25), quantile(sorted, 0.75)};
    if (g.means[0] == g.means[1]) {
        // Heavy ties at the quartiles; spread the starting means over the full range.
        g.means = {sorted.front(), sorted.back()};
    }
    g.weights = {0.5, 0.5};
    g.variances = {var, var};
    order_components(g);

    fit.log_likelihood.push_back(mean_log_likelihood(g, scores));
    std::vector<double> resp(scores.size());
    for (int iter = 0; iter < options.max_iters; ++iter) {
        // E-step: responsibility of component 1.
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double a = std::log(g.weights[0]) + log_normal(scores[i], g.means[0], g.variances[0]);
            const double b = std::log(g.weights[1]) + log_normal(scores[i], g.means[1], g.variances[1]);
            resp[i] = 1.0 / (1.0 + std::exp(a - b));
        }
        // M-step.
        std::array<double, 2> nk{0.0, 0.0};
        std::array<double, 2> sum{0.0, 0.0};
        for (std::size_t i = 0; i < scores.size(); ++i) {
            nk[1] += resp[i];
            nk[0] += 1.0 - resp[i];
            sum[1] += resp[i] * scores[i];
            sum[0] += (1.0 - resp[i]) * scores[i];
        }
        if (nk[0] <= 0.0 || nk[1] <= 0.0) {
            // A component lost all mass; keep the last valid model.
            break;
        }
        Gmm1d next = g;
        for (int c = 0; c < 2; ++c) {
            next.means[c] = sum[c] / nk[c];
            next.weights[c] = nk[c] / n;
        }
        std::array<double, 2> sq{0.0, 0.0};
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double d0 = scores[i] - next.means[0];
            const double d1 = scores[i] - next.means[1];
            sq[0] += (1.0 - resp[i]) * d0 * d0;
            sq[1] += resp[i] * d1 * d1;
        }
        for (int c = 0; c < 2; ++c) {
            next.variances[c] = std::max(sq[c] / nk[c], options.variance_floor);
        }
        order_components(next);

        const double ll = mean_log_likelihood(next, scores);
        const double improvement = ll - fit.log_likelihood.back();
        g = next;
        fit.log_likelihood.push_back(ll);
        if (improvement < options.tol) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

std::vector<double> to_probabilistic(const Gmm1d& model, std::span<const double> scores) {
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = model.responsibilities(scores[i])[1];
    }
    return out;
}

std::vector<double> fuse_eu(std::span<const double> eu_learning_prob,
                            std::span<const double> eu_data_prob) {
    if (eu_learning_prob.size() != eu_data_prob.size()) {
        throw ShapeError("fuse_eu: length mismatch (" + std::to_string(eu_learning_prob.size()) +
                         " vs " + std::to_string(eu_data_prob.size()) + ")");
    }
    std::vector<double> out(eu_learning_prob.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = eu_learning_prob[i] * eu_data_prob[i];
    }
    return out;
}

Probabilistic probabilistic_or_fallback(std::span<const double> scores,
                                        const EmOptions& options) {
    Probabilistic out;
    try {
        const GmmFit fit = fit_gmm(scores, options);
        out.model = fit.model;
        out.values = to_probabilistic(fit.model, scores);
        out.fitted = true;
        return out;
    } catch (const DegenerateScores&) {
    }
    out.values.assign(scores.size(), 0.5);
    if (scores.empty()) {
        return out;
    }
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    if (*hi > *lo) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            out.values[i] = (scores[i] - *lo) / (*hi - *lo);
        }
    }
    return out;
}

}  // namespace eaoa::fusion
