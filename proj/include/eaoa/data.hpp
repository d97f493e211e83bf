#pragma once

#include "eaoa/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace eaoa::data {

/// Raw labeled examples. Labels are original class ids in [0, num_classes).
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    void validate() const;
    bool operator==(const Dataset&) const = default;
};

/// How a dataset is cut into an open-set pool.
struct SplitOptions {
    /// Fraction of all classes treated as known.
    double mismatch_ratio = 0.4;
    /// Per-class fraction held out for evaluation.
    double test_fraction = 0.2;
    /// Per-known-class fraction of training examples labeled at the start (at least one).
    double initial_fraction = 0.05;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Synthetic open-set problem: isotropic Gaussian clusters around seeded centers.
struct OpenSetSpec {
    int total_classes = 10;
    int per_class = 200;
    int dim = 128;
    /// Standard deviation of the class-center draw.
    double center_spread = 0.3;
    /// Within-class standard deviation.
    double within_std = 1.0;
    std::uint64_t seed = 1;
    SplitOptions split;

    void validate() const;
};

/// Number of known classes for a mismatch ratio, floor(ratio * total).
int known_class_count(double mismatch_ratio, int total_classes);

Dataset synthesize(const OpenSetSpec& spec);

/// Partitioned open-set state for one active-learning run.
///
/// Rows of `features()` are the dataset rows. Internal labels are 0..C-1 for the
/// known classes (in ascending original-id order) and C for every unknown class.
/// The true label of an unlabeled row is only revealed by oracle_label().
class Pool {
public:
    int num_known() const { return num_known_; }
    /// C + 1: known classes plus the collapsed unknown class.
    int detector_classes() const { return num_known_ + 1; }
    int unknown_label() const { return num_known_; }
    /// Original class ids designated known, ascending; internal label i maps to entry i.
    const std::vector<int>& known_classes() const { return known_classes_; }

    const Matrix& features() const { return features_; }
    Matrix rows(std::span<const std::size_t> indices) const;

    const std::vector<std::size_t>& labeled_known() const { return labeled_known_; }
    const std::vector<int>& labeled_known_labels() const { return labeled_known_labels_; }
    const std::vector<std::size_t>& labeled_unknown() const { return labeled_unknown_; }
    /// Ascending row ids.
    const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }

    /// Held-out known-class rows and their internal labels.
    const std::vector<std::size_t>& test() const { return test_; }
    const std::vector<int>& test_labels() const { return test_labels_; }
    /// Held-out rows of every class (test plus unknown-class hold-outs), labels in 0..C.
    const std::vector<std::size_t>& detector_eval() const { return detector_eval_; }
    const std::vector<int>& detector_eval_labels() const { return detector_eval_labels_; }

    /// labeled_known followed by labeled_unknown, with labels in 0..C.
    std::vector<std::size_t> labeled_all() const;
    std::vector<int> labeled_all_labels() const;

    struct OracleResult {
        std::vector<int> labels;  ///< internal label per queried row
        std::size_t known = 0;
        double precision = 0.0;   ///< known / queried
    };

    /// Reveal labels of unlabeled rows and move them into the labeled partitions.
    OracleResult oracle_label(std::span<const std::size_t> indices);

    /// Partition membership (no hidden labels) for audit logs.
    nlohmann::json snapshot() const;

    bool operator==(const Pool&) const = default;

    friend Pool build_pool(const Dataset& dataset, const SplitOptions& options);

private:
    Matrix features_;
    std::vector<int> truth_;
    int num_known_ = 0;
    std::vector<int> known_classes_;
    std::vector<std::size_t> labeled_known_;
    std::vector<int> labeled_known_labels_;
    std::vector<std::size_t> labeled_unknown_;
    std::vector<std::size_t> unlabeled_;
    std::vector<std::size_t> test_;
    std::vector<int> test_labels_;
    std::vector<std::size_t> detector_eval_;
    std::vector<int> detector_eval_labels_;
};

/// Seeded open-set split: known-class draw, per-class hold-out, initial labeled set.
Pool build_pool(const Dataset& dataset, const SplitOptions& options);

Pool generate_synthetic(const OpenSetSpec& spec);

/// Text format: '#' comment lines, a header `eaoa-dataset dim=<D> classes=<N>`, then one
/// example per line as D comma-separated reals followed by an integer label in [0, N).
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const Dataset& dataset);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

Pool load_feature_dataset(const std::filesystem::path& path, const SplitOptions& options);

}  // namespace eaoa::data
