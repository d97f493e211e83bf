#pragma once

#include "eaoa/common.hpp"
#include "eaoa/nn.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace eaoa::density {

/// Feature rows produced by a model layer.
struct FeatureMatrix {
    Matrix values;
    std::string source = "penultimate";

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
};

/// Penultimate post-ReLU activations of `model` on `batch`.
FeatureMatrix extract_features(const nn::Mlp& model, const Matrix& batch);

/// Arrows received by each unlabeled example, split by the sender's class.
class ArrowCounts {
public:
    ArrowCounts() = default;
    ArrowCounts(std::size_t num_unlabeled, std::size_t num_classes);

    std::size_t num_unlabeled() const { return num_unlabeled_; }
    std::size_t num_classes() const { return num_classes_; }

    std::int64_t& at(std::size_t example, std::size_t cls) {
        return counts_[example * num_classes_ + cls];
    }
    std::int64_t at(std::size_t example, std::size_t cls) const {
        return counts_[example * num_classes_ + cls];
    }
    std::span<const std::int64_t> row(std::size_t example) const {
        return {counts_.data() + example * num_classes_, num_classes_};
    }

    /// Labeled examples per class, |X^y|.
    std::vector<std::int64_t>& class_totals() { return totals_; }
    const std::vector<std::int64_t>& class_totals() const { return totals_; }

    /// Number of arrows each labeled example emitted.
    std::size_t k = 0;

    bool operator==(const ArrowCounts&) const = default;

private:
    std::size_t num_unlabeled_ = 0;
    std::size_t num_classes_ = 0;
    std::vector<std::int64_t> counts_;
    std::vector<std::int64_t> totals_;
};

/// Every labeled row sends one arrow, tagged with its class, to each of its `k`
/// nearest unlabeled rows under cosine distance. Ties go to the lower unlabeled
/// index. `num_classes` counts the unknown class too (C + 1).
ArrowCounts reverse_knn_arrows(const FeatureMatrix& labeled, std::span<const int> labels,
                               const FeatureMatrix& unlabeled, std::size_t k,
                               std::size_t num_classes);

/// Data-driven epistemic score per unlabeled example, using E(x, y) = -log(arrows_y + s):
///   EU_D = -log sum_{c<C} (a_c + s) + log(1 + a_C + s)
std::vector<double> data_driven_eu(const ArrowCounts& arrows, double smoothing);

/// Class posterior of one unlabeled example as normalized (smoothed) arrow fractions.
std::vector<double> arrow_posterior(const ArrowCounts& arrows, std::size_t example,
                                    double smoothing);

}  // namespace eaoa::density
