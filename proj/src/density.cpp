#include "eaoa/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace eaoa::density {

namespace {

Matrix normalized_rows(const FeatureMatrix& features, const char* which) {
    Matrix out = features.values;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        if (!out.row(r).allFinite()) {
            throw ValidationError(std::string("reverse_knn_arrows: ") + which + " row " +
                                  std::to_string(r) + " is not finite");
        }
        const double norm = out.row(r).norm();
        if (!(norm > 0.0)) {
            throw ValidationError(std::string("reverse_knn_arrows: ") + which + " row " +
                                  std::to_string(r) +
                                  " has zero norm; cosine distance is undefined");
        }
        out.row(r) /= norm;
    }
    return out;
}

}  // namespace

FeatureMatrix extract_features(const nn::Mlp& model, const Matrix& batch) {
    if (model.num_layers() < 2) {
        throw ShapeError("extract_features: model has a single layer, no penultimate features");
    }
    return {model.penultimate(batch), "penultimate"};
}

ArrowCounts::ArrowCounts(std::size_t num_unlabeled, std::size_t num_classes)
    : num_unlabeled_(num_unlabeled),
      num_classes_(num_classes),
      counts_(num_unlabeled * num_classes, 0),
      totals_(num_classes, 0) {}

ArrowCounts reverse_knn_arrows(const FeatureMatrix& labeled, std::span<const int> labels,
                               const FeatureMatrix& unlabeled, std::size_t k,
                               std::size_t num_classes) {
    if (labels.size() != labeled.rows()) {
        throw ShapeError("reverse_knn_arrows: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(labeled.rows()) + " labeled rows");
    }
    if (labeled.rows() > 0 && labeled.dim() != unlabeled.dim()) {
        throw ShapeError("reverse_knn_arrows: labeled features have dim " +
                         std::to_string(labeled.dim()) + ", unlabeled have " +
                         std::to_string(unlabeled.dim()));
    }
    if (k == 0) {
        throw ValidationError("reverse_knn_arrows: K must be positive");
    }
    if (k > unlabeled.rows()) {
        throw ValidationError("reverse_knn_arrows: K=" + std::to_string(k) + " exceeds the " +
                              std::to_string(unlabeled.rows()) + " unlabeled examples");
    }
    if (num_classes < 2) {
        throw ValidationError("reverse_knn_arrows: need at least two classes");
    }

    ArrowCounts arrows(unlabeled.rows(), num_classes);
    arrows.k = k;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw ValidationError("reverse_knn_arrows: label " + std::to_string(labels[i]) +
                                  " at labeled row " + std::to_string(i) + " out of range");
        }
        ++arrows.class_totals()[static_cast<std::size_t>(labels[i])];
    }
    if (labels.empty()) {
        return arrows;
    }

    const Matrix l = normalized_rows(labeled, "labeled");
    const Matrix u = normalized_rows(unlabeled, "unlabeled");
    const Matrix similarity = l * u.transpose();

    std::vector<std::size_t> order(unlabeled.rows());
    for (Eigen::Index r = 0; r < similarity.rows(); ++r) {
        std::iota(order.begin(), order.end(), 0);
        const auto sim = similarity.row(r);
        const auto closer = [&](std::size_t a, std::size_t b) {
            const double da = 1.0 - sim(static_cast<Eigen::Index>(a));
            const double db = 1.0 - sim(static_cast<Eigen::Index>(b));
            return da < db || (da == db && a < b);
        };
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                          order.end(), closer);
        const auto cls = static_cast<std::size_t>(labels[static_cast<std::size_t>(r)]);
        for (std::size_t j = 0; j < k; ++j) {
            ++arrows.at(order[j], cls);
        }
    }
    return arrows;
}

std::vector<double> data_driven_eu(const ArrowCounts& arrows, double smoothing) {
    if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
        throw ValidationError("data_driven_eu: smoothing must be finite and non-negative");
    }
    const std::size_t classes = arrows.num_classes();
    if (classes < 2) {
        throw ValidationError("data_driven_eu: need at least one known class plus unknown");
    }
    std::vector<double> out(arrows.num_unlabeled());
    for (std::size_t i = 0; i < arrows.num_unlabeled(); ++i) {
        const auto row = arrows.row(i);
        double known = 0.0;
        for (std::size_t c = 0; c + 1 < classes; ++c) {
            if (row[c] < 0) {
                throw ValidationError("data_driven_eu: negative arrow count");
            }
            if (smoothing == 0.0 && row[c] == 0) {
                throw ValidationError("data_driven_eu: zero arrow count for example " +
                                      std::to_string(i) + " with smoothing 0");
            }
            known += static_cast<double>(row[c]) + smoothing;
        }
        const double unknown = static_cast<double>(row[classes - 1]) + smoothing;
        if (smoothing == 0.0 && row[classes - 1] == 0) {
            throw ValidationError("data_driven_eu: zero arrow count for example " +
                                  std::to_string(i) + " with smoothing 0");
        }
        out[i] = -std::log(known) + std::log1p(unknown);
    }
    return out;
}

std::vector<double> arrow_posterior(const ArrowCounts& arrows, std::size_t example,
                                    double smoothing) {
    if (example >= arrows.num_unlabeled()) {
        throw ValidationError("arrow_posterior: example index out of range");
    }
    const auto row = arrows.row(example);
    std::vector<double> p(row.size());
    double total = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
        p[c] = static_cast<double>(row[c]) + smoothing;
        total += p[c];
    }
    if (!(total > 0.0)) {
        throw ValidationError("arrow_posterior: example received no arrows");
    }
    for (double& v : p) {
        v /= total;
    }
    return p;
}

}  // namespace eaoa::density
