#include "eaoa/nn.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace eaoa::nn {

namespace {

constexpr const char* kCheckpointMagic = "eaoa-mlp";
constexpr int kCheckpointVersion = 1;

void validate_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) {
        throw ValidationError("Mlp: layer_dims needs at least an input and an output dimension");
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] <= 0) {
            throw ValidationError("Mlp: layer_dims[" + std::to_string(i) + "] must be positive");
        }
    }
}

std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
    validate_dims(dims_);
    layers_.reserve(dims_.size() - 1);
    for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
        layers_.push_back({Matrix::Zero(dims_[i + 1], dims_[i]), Vector::Zero(dims_[i + 1])});
    }
}

Mlp Mlp::zeros(std::vector<int> layer_dims) { return Mlp(std::move(layer_dims)); }

Mlp Mlp::initialized(std::vector<int> layer_dims, std::uint64_t seed) {
    Mlp model(std::move(layer_dims));
    std::mt19937_64 rng(seed);
    for (auto& layer : model.layers_) {
        const double fan_in = static_cast<double>(layer.weight.cols());
        const double fan_out = static_cast<double>(layer.weight.rows());
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                layer.weight(r, c) = dist(rng);
            }
        }
    }
    return model;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) {
        n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    }
    return n;
}

void Mlp::check_input(const Matrix& batch) const {
    if (layers_.empty()) {
        throw ShapeError("Mlp: model has no layers");
    }
    if (batch.cols() != dims_.front()) {
        throw ShapeError("Mlp: input has " + std::to_string(batch.cols()) +
                         " features, model expects " + std::to_string(dims_.front()));
    }
}

ForwardCache Mlp::forward_cached(const Matrix& batch) const {
    check_input(batch);
    ForwardCache cache;
    cache.activations.reserve(layers_.size() + 1);
    cache.activations.push_back(batch);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        Matrix z = cache.activations.back() * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (i + 1 < layers_.size()) {
            z = z.cwiseMax(0.0);
        }
        cache.activations.push_back(std::move(z));
    }
    return cache;
}

Matrix Mlp::forward(const Matrix& batch) const {
    check_input(batch);
    Matrix a = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        Matrix z = a * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (i + 1 < layers_.size()) {
            z = z.cwiseMax(0.0);
        }
        a = std::move(z);
    }
    return a;
}

Matrix Mlp::penultimate(const Matrix& batch) const {
    if (layers_.size() < 2) {
        throw ShapeError("Mlp: penultimate features need at least one hidden layer");
    }
    check_input(batch);
    Matrix a = batch;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        Matrix z = a * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        a = z.cwiseMax(0.0);
    }
    return a;
}

Gradients Mlp::backward(const ForwardCache& cache, const Matrix& grad_logits) const {
    if (cache.activations.size() != layers_.size() + 1) {
        throw ShapeError("Mlp::backward: cache does not belong to this model");
    }
    const Matrix& logits = cache.logits();
    if (grad_logits.rows() != logits.rows() || grad_logits.cols() != logits.cols()) {
        throw ShapeError("Mlp::backward: upstream gradient is " + shape_of(grad_logits) +
                         ", logits are " + shape_of(logits));
    }

    Gradients grads;
    grads.layers.resize(layers_.size());
    Matrix delta = grad_logits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const Matrix& input = cache.activations[i];
        grads.layers[i].weight = delta.transpose() * input;
        grads.layers[i].bias = delta.colwise().sum().transpose();
        if (i == 0) {
            break;
        }
        Matrix upstream = delta * layers_[i].weight;
        // ReLU derivative: pass-through where the activation was positive.
        delta = (input.array() > 0.0).select(upstream, 0.0);
    }
    return grads;
}

void Mlp::save(std::ostream& out) const {
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << dims_.size();
    for (int d : dims_) {
        out << ' ' << d;
    }
    out << '\n' << std::setprecision(17);
    for (const auto& layer : layers_) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                out << (c ? " " : "") << layer.weight(r, c);
            }
            out << '\n';
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
            out << (r ? " " : "") << layer.bias(r);
        }
        out << '\n';
    }
}

Mlp Mlp::load(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kCheckpointMagic) {
        throw ValidationError("Mlp::load: missing eaoa-mlp header");
    }
    if (version != kCheckpointVersion) {
        throw ValidationError("Mlp::load: unsupported checkpoint version " +
                              std::to_string(version));
    }
    std::size_t n = 0;
    if (!(in >> n) || n < 2 || n > 1024) {
        throw ValidationError("Mlp::load: bad layer count");
    }
    std::vector<int> dims(n);
    for (auto& d : dims) {
        if (!(in >> d)) {
            throw ValidationError("Mlp::load: truncated layer_dims");
        }
    }
    Mlp model(std::move(dims));
    for (auto& layer : model.layers_) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                if (!(in >> layer.weight(r, c))) {
                    throw ValidationError("Mlp::load: truncated weights");
                }
            }
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
            if (!(in >> layer.bias(r))) {
                throw ValidationError("Mlp::load: truncated biases");
            }
        }
    }
    return model;
}

double SgdConfig::learning_rate_at(int epoch) const {
    return learning_rate * std::pow(lr_decay_factor, epoch / lr_decay_every);
}

void SgdConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError("sgd.learning_rate must be a finite non-negative number");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw ValidationError("sgd.momentum must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) {
        throw ValidationError("sgd.weight_decay must be non-negative");
    }
    if (batch_size <= 0) {
        throw ValidationError("sgd.batch_size must be positive");
    }
    if (epochs <= 0) {
        throw ValidationError("sgd.epochs must be positive");
    }
    if (!(lr_decay_factor > 0.0)) {
        throw ValidationError("sgd.lr_decay_factor must be positive");
    }
    if (lr_decay_every <= 0) {
        throw ValidationError("sgd.lr_decay_every must be positive");
    }
}

TrainResult train_epochs(Mlp model, const Matrix& inputs, std::span<const int> labels,
                         const BatchLoss& loss, const SgdConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(inputs.rows());
    if (n == 0) {
        throw ValidationError("train_epochs: no training examples");
    }
    if (labels.size() != n) {
        throw ShapeError("train_epochs: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " examples");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= model.output_dim()) {
            throw ValidationError("train_epochs: label " + std::to_string(labels[i]) +
                                  " at row " + std::to_string(i) + " is outside [0, " +
                                  std::to_string(model.output_dim()) + ")");
        }
    }

    std::vector<Layer> velocity;
    velocity.reserve(model.num_layers());
    for (const auto& layer : model.layers()) {
        velocity.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                            Vector::Zero(layer.bias.size())});
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));
    Matrix x;
    Matrix grad_logits;
    std::vector<int> y;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        const double lr = cfg.learning_rate_at(epoch);
        double epoch_loss = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            x.resize(static_cast<Eigen::Index>(len), inputs.cols());
            y.resize(len);
            for (std::size_t j = 0; j < len; ++j) {
                x.row(static_cast<Eigen::Index>(j)) =
                    inputs.row(static_cast<Eigen::Index>(order[start + j]));
                y[j] = labels[order[start + j]];
            }

            const ForwardCache cache = model.forward_cached(x);
            grad_logits.setZero(cache.logits().rows(), cache.logits().cols());
            const double batch_loss = loss(cache.logits(), y, grad_logits);
            if (!std::isfinite(batch_loss) || !grad_logits.allFinite()) {
                std::ostringstream msg;
                msg << "train_epochs: non-finite loss at epoch " << epoch << ", batch "
                    << batches << " (loss=" << batch_loss << ", lr=" << lr << ")";
                throw NumericError(msg.str());
            }
            const Gradients grads = model.backward(cache, grad_logits);

            auto& layers = model.layers();
            for (std::size_t l = 0; l < layers.size(); ++l) {
                velocity[l].weight = cfg.momentum * velocity[l].weight + grads.layers[l].weight +
                                     cfg.weight_decay * layers[l].weight;
                velocity[l].bias = cfg.momentum * velocity[l].bias + grads.layers[l].bias +
                                   cfg.weight_decay * layers[l].bias;
                layers[l].weight -= lr * velocity[l].weight;
                layers[l].bias -= lr * velocity[l].bias;
            }
            epoch_loss += batch_loss;
            ++batches;
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    result.model = std::move(model);
    return result;
}

std::vector<int> predict(const Mlp& model, const Matrix& inputs) {
    const Matrix logits = model.forward(inputs);
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(r, c) > logits(r, best)) {
                best = c;
            }
        }
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

double accuracy(const Mlp& model, const Matrix& inputs, std::span<const int> labels) {
    if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
        throw ShapeError("accuracy: label count does not match input rows");
    }
    if (labels.empty()) {
        return 0.0;
    }
    const auto pred = predict(model, inputs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hits += pred[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace eaoa::nn
