#pragma once

#include "eaoa/data.hpp"
#include "eaoa/energy.hpp"
#include "eaoa/nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace eaoa::training {

using energy::LossAndGrad;

struct DetectorLossConfig {
    energy::MarginConfig margin;
    /// C + 1.
    int class_count = 2;

    void validate() const;
};

/// -log softmax(logits)[label] and its gradient softmax - onehot.
LossAndGrad cross_entropy(std::span<const double> logits, int label);

/// cross_entropy + lambda_e * margin_energy_loss. Labels below class_count - 1 are known.
LossAndGrad detector_loss(std::span<const double> logits, int label,
                          const DetectorLossConfig& cfg);

/// Batch-mean cross-entropy.
nn::BatchLoss classifier_batch_loss();
/// Batch-mean detector loss.
nn::BatchLoss detector_batch_loss(DetectorLossConfig cfg);

/// Hidden-layer widths; input and output widths come from the data.
struct ModelTemplate {
    std::vector<int> hidden{64, 64};

    std::vector<int> layer_dims(int input_dim, int output_dim) const;
};

/// Fresh (C+1)-way detector trained on labeled_known and labeled_unknown.
nn::TrainResult train_detector(const data::Pool& pool, const ModelTemplate& arch,
                               const nn::SgdConfig& sgd, const DetectorLossConfig& cfg,
                               std::uint64_t seed);

/// Fresh C-way classifier trained on labeled_known only.
nn::TrainResult train_classifier(const data::Pool& pool, const ModelTemplate& arch,
                                 const nn::SgdConfig& sgd, std::uint64_t seed);

}  // namespace eaoa::training
