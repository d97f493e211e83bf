#pragma once

#include "eaoa/common.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace eaoa::nn {

/// Fully connected layer; `weight` is (fan_out x fan_in).
struct Layer {
    Matrix weight;
    Vector bias;

    bool operator==(const Layer& other) const {
        return weight == other.weight && bias == other.bias;
    }
};

/// Activations recorded by a forward pass, consumed by backward().
struct ForwardCache {
    /// activations[0] is the input batch; activations[i] is the post-activation
    /// output of layer i-1. The last entry holds the logits.
    std::vector<Matrix> activations;

    const Matrix& logits() const { return activations.back(); }
};

/// Parameter gradients, shaped exactly like the model's layers.
struct Gradients {
    std::vector<Layer> layers;
};

/// Feed-forward network: ReLU on hidden layers, identity on the output layer.
class Mlp {
public:
    Mlp() = default;

    /// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
    static Mlp initialized(std::vector<int> layer_dims, std::uint64_t seed);
    /// All parameters zero.
    static Mlp zeros(std::vector<int> layer_dims);

    const std::vector<int>& layer_dims() const { return dims_; }
    std::size_t num_layers() const { return layers_.size(); }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    std::size_t parameter_count() const;

    Matrix forward(const Matrix& batch) const;
    ForwardCache forward_cached(const Matrix& batch) const;

    /// Penultimate-layer activations (after the rectifier).
    Matrix penultimate(const Matrix& batch) const;

    /// Back-propagate `grad_logits` (dLoss/dLogits, B x out) through the cached pass.
    Gradients backward(const ForwardCache& cache, const Matrix& grad_logits) const;

    bool operator==(const Mlp& other) const {
        return dims_ == other.dims_ && layers_ == other.layers_;
    }

    /// Text checkpoint with a version header; doubles are written round-trip exact.
    void save(std::ostream& out) const;
    static Mlp load(std::istream& in);

private:
    explicit Mlp(std::vector<int> layer_dims);
    void check_input(const Matrix& batch) const;

    std::vector<int> dims_;
    std::vector<Layer> layers_;
};

struct SgdConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 128;
    int epochs = 100;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 40;

    /// Learning rate in effect during zero-based `epoch`.
    double learning_rate_at(int epoch) const;
    void validate() const;
};

/// Mean loss over a batch. Writes dLoss/dLogits into `grad_logits` (resized to the shape
/// of `logits`); the gradient must be that of the returned mean.
using BatchLoss =
    std::function<double(const Matrix& logits, std::span<const int> labels, Matrix& grad_logits)>;

struct TrainResult {
    Mlp model;
    /// Mean per-batch loss for each epoch.
    std::vector<double> loss_trace;
};

/// Mini-batch SGD with classical momentum: v <- mu*v + (g + wd*theta); theta <- theta - lr*v.
/// Batches come from a seeded shuffle each epoch; the last partial batch is kept.
TrainResult train_epochs(Mlp model, const Matrix& inputs, std::span<const int> labels,
                         const BatchLoss& loss, const SgdConfig& cfg, std::uint64_t seed);

/// Row-wise argmax with lowest-index tie breaking.
std::vector<int> predict(const Mlp& model, const Matrix& inputs);
double accuracy(const Mlp& model, const Matrix& inputs, std::span<const int> labels);

}  // namespace eaoa::nn
