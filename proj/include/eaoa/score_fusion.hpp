#pragma once

#include "eaoa/common.hpp"

#include <array>
#include <span>
#include <vector>

namespace eaoa::fusion {

/// Two-component 1-D Gaussian mixture.
struct Gmm1d {
    std::array<double, 2> weights{0.5, 0.5};
    std::array<double, 2> means{0.0, 0.0};
    std::array<double, 2> variances{1.0, 1.0};
    /// Index of the component with the lower mean.
    int low_component = 0;

    int high_component() const { return 1 - low_component; }

    /// Posterior responsibilities (low, high) of one score.
    std::array<double, 2> responsibilities(double score) const;
    double log_density(double score) const;
};

struct EmOptions {
    int max_iters = 200;
    double tol = 1e-8;
    double variance_floor = 1e-6;
};

struct GmmFit {
    Gmm1d model;
    /// Mean log-likelihood per score: entry 0 is the initialization, then one per EM step.
    std::vector<double> log_likelihood;
    bool converged = false;
};

/// Thrown when the scores cannot support a two-component fit.
class DegenerateScores : public NumericError {
public:
    using NumericError::NumericError;
};

/// EM for a two-component mixture. Starts from the 25th/75th percentiles with equal
/// weights and the sample variance for both components, then iterates until the
/// mean log-likelihood improves by less than `tol`.
GmmFit fit_gmm(std::span<const double> scores, const EmOptions& options = {});

/// Posterior responsibility of the higher-mean component for every score.
std::vector<double> to_probabilistic(const Gmm1d& model, std::span<const double> scores);

/// Element-wise product.
std::vector<double> fuse_eu(std::span<const double> eu_learning_prob,
                            std::span<const double> eu_data_prob);

/// Fit-and-convert with a rank-preserving fallback: when the mixture cannot be
/// fitted the scores are min-max rescaled to [0,1] (0.5 everywhere if constant).
struct Probabilistic {
    std::vector<double> values;
    bool fitted = false;
    Gmm1d model;
};
Probabilistic probabilistic_or_fallback(std::span<const double> scores,
                                        const EmOptions& options = {});

}  // namespace eaoa::fusion
