#include "eaoa/training.hpp"

#include <cmath>
#include <string>

namespace eaoa::training {

namespace {

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Seeds for initialization and shuffling are split so that each stays independent.
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kShuffleTag = 2;

}  // namespace

void DetectorLossConfig::validate() const {
    margin.validate();
    if (class_count < 2) {
        throw ValidationError("detector loss: class_count must be at least 2");
    }
}

LossAndGrad cross_entropy(std::span<const double> logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw ValidationError("cross_entropy: label " + std::to_string(label) +
                              " outside [0, " + std::to_string(logits.size()) + ")");
    }
    LossAndGrad out;
    out.grad = energy::softmax(logits);
    // -log p_label = log-sum-exp - f_label = -free_energy - f_label
    out.loss = -energy::free_energy(logits) - logits[static_cast<std::size_t>(label)];
    out.grad[static_cast<std::size_t>(label)] -= 1.0;
    return out;
}

LossAndGrad detector_loss(std::span<const double> logits, int label,
                          const DetectorLossConfig& cfg) {
    if (static_cast<int>(logits.size()) != cfg.class_count) {
        throw ShapeError("detector_loss: expected " + std::to_string(cfg.class_count) +
                         " logits, got " + std::to_string(logits.size()));
    }
    LossAndGrad out = cross_entropy(logits, label);
    if (cfg.margin.lambda_e == 0.0) {
        return out;
    }
    const bool is_known = label < cfg.class_count - 1;
    const LossAndGrad margin = energy::margin_energy_loss(logits, is_known, cfg.margin);
    out.loss += cfg.margin.lambda_e * margin.loss;
    for (std::size_t c = 0; c < out.grad.size(); ++c) {
        out.grad[c] += cfg.margin.lambda_e * margin.grad[c];
    }
    return out;
}

nn::BatchLoss classifier_batch_loss() {
    return [](const Matrix& logits, std::span<const int> labels, Matrix& grad) {
        const double inv = 1.0 / static_cast<double>(logits.rows());
        grad.resize(logits.rows(), logits.cols());
        double total = 0.0;
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            const LossAndGrad lg = cross_entropy(row_span(logits, r), labels[static_cast<std::size_t>(r)]);
            total += lg.loss;
            for (Eigen::Index c = 0; c < logits.cols(); ++c) {
                grad(r, c) = inv * lg.grad[static_cast<std::size_t>(c)];
            }
        }
        return total * inv;
    };
}

nn::BatchLoss detector_batch_loss(DetectorLossConfig cfg) {
    cfg.validate();
    return [cfg](const Matrix& logits, std::span<const int> labels, Matrix& grad) {
        const double inv = 1.0 / static_cast<double>(logits.rows());
        grad.resize(logits.rows(), logits.cols());
        double total = 0.0;
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            const LossAndGrad lg =
                detector_loss(row_span(logits, r), labels[static_cast<std::size_t>(r)], cfg);
            total += lg.loss;
            for (Eigen::Index c = 0; c < logits.cols(); ++c) {
                grad(r, c) = inv * lg.grad[static_cast<std::size_t>(c)];
            }
        }
        return total * inv;
    };
}

std::vector<int> ModelTemplate::layer_dims(int input_dim, int output_dim) const {
    std::vector<int> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);
    return dims;
}

nn::TrainResult train_detector(const data::Pool& pool, const ModelTemplate& arch,
                               const nn::SgdConfig& sgd, const DetectorLossConfig& cfg,
                               std::uint64_t seed) {
    if (cfg.class_count != pool.detector_classes()) {
        throw ValidationError("train_detector: loss expects " + std::to_string(cfg.class_count) +
                              " classes, pool has " + std::to_string(pool.detector_classes()));
    }
    const auto ids = pool.labeled_all();
    if (ids.empty()) {
        throw ValidationError("train_detector: labeled pool is empty");
    }
    const auto labels = pool.labeled_all_labels();
    auto model = nn::Mlp::initialized(
        arch.layer_dims(static_cast<int>(pool.features().cols()), pool.detector_classes()),
        derive_seed(seed, kInitTag));
    return nn::train_epochs(std::move(model), pool.rows(ids), labels, detector_batch_loss(cfg),
                            sgd, derive_seed(seed, kShuffleTag));
}

nn::TrainResult train_classifier(const data::Pool& pool, const ModelTemplate& arch,
                                 const nn::SgdConfig& sgd, std::uint64_t seed) {
    if (pool.labeled_known().empty()) {
        throw ValidationError("train_classifier: no labeled known-class examples");
    }
    auto model = nn::Mlp::initialized(
        arch.layer_dims(static_cast<int>(pool.features().cols()), pool.num_known()),
        derive_seed(seed, kInitTag));
    return nn::train_epochs(std::move(model), pool.rows(pool.labeled_known()),
                            pool.labeled_known_labels(), classifier_batch_loss(), sgd,
                            derive_seed(seed, kShuffleTag));
}

}  // namespace eaoa::training
