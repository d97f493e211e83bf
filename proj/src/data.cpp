#include "eaoa/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>

namespace eaoa::data {

namespace {

constexpr std::string_view kHeaderTag = "eaoa-dataset";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (text.empty()) {
        return false;
    }
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

}  // namespace

void Dataset::validate() const {
    if (num_classes < 2) {
        throw ValidationError("dataset: need at least two classes");
    }
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw ShapeError("dataset: feature rows and labels differ in count");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw ValidationError("dataset: label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
        }
        if (!features.row(static_cast<Eigen::Index>(i)).allFinite()) {
            throw ValidationError("dataset: non-finite feature at row " + std::to_string(i));
        }
    }
}

void SplitOptions::validate() const {
    if (!(mismatch_ratio > 0.0 && mismatch_ratio <= 1.0)) {
        throw ValidationError("dataset.mismatch_ratio must lie in (0, 1]");
    }
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw ValidationError("dataset.test_fraction must lie in [0, 1)");
    }
    if (!(initial_fraction > 0.0 && initial_fraction <= 1.0)) {
        throw ValidationError("dataset.initial_fraction must lie in (0, 1]");
    }
}

void OpenSetSpec::validate() const {
    if (total_classes < 2) {
        throw ValidationError("dataset.total_classes must be at least 2");
    }
    if (per_class < 2) {
        throw ValidationError("dataset.per_class must be at least 2");
    }
    if (dim < 1) {
        throw ValidationError("dataset.dim must be positive");
    }
    if (!(center_spread >= 0.0) || !std::isfinite(center_spread)) {
        throw ValidationError("dataset.center_spread must be finite and non-negative");
    }
    if (!(within_std > 0.0) || !std::isfinite(within_std)) {
        throw ValidationError("dataset.within_std must be finite and positive");
    }
    split.validate();
    if (known_class_count(split.mismatch_ratio, total_classes) < 2) {
        throw ValidationError("dataset.mismatch_ratio leaves fewer than 2 known classes");
    }
}

int known_class_count(double mismatch_ratio, int total_classes) {
    // The epsilon keeps e.g. 0.3 * 10 from flooring to 2.
    return static_cast<int>(std::floor(mismatch_ratio * total_classes + 1e-9));
}

Dataset synthesize(const OpenSetSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    Matrix centers(spec.total_classes, spec.dim);
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        for (Eigen::Index d = 0; d < centers.cols(); ++d) {
            centers(c, d) = spec.center_spread * unit(rng);
        }
    }

    const auto n = static_cast<std::size_t>(spec.total_classes) *
                   static_cast<std::size_t>(spec.per_class);
    // Rows are shuffled so that row order carries no class information.
    std::vector<std::size_t> slot(n);
    std::iota(slot.begin(), slot.end(), 0);
    std::shuffle(slot.begin(), slot.end(), rng);

    Dataset ds;
    ds.num_classes = spec.total_classes;
    ds.features.resize(static_cast<Eigen::Index>(n), spec.dim);
    ds.labels.resize(n);
    std::size_t i = 0;
    for (int c = 0; c < spec.total_classes; ++c) {
        for (int j = 0; j < spec.per_class; ++j, ++i) {
            const auto row = static_cast<Eigen::Index>(slot[i]);
            for (Eigen::Index d = 0; d < spec.dim; ++d) {
                ds.features(row, d) = centers(c, d) + spec.within_std * unit(rng);
            }
            ds.labels[slot[i]] = c;
        }
    }
    return ds;
}

Matrix Pool::rows(std::span<const std::size_t> indices) const {
    Matrix out(static_cast<Eigen::Index>(indices.size()), features_.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= static_cast<std::size_t>(features_.rows())) {
            throw ValidationError("Pool::rows: row " + std::to_string(indices[i]) +
                                  " out of range");
        }
        out.row(static_cast<Eigen::Index>(i)) =
            features_.row(static_cast<Eigen::Index>(indices[i]));
    }
    return out;
}

std::vector<std::size_t> Pool::labeled_all() const {
    std::vector<std::size_t> out = labeled_known_;
    out.insert(out.end(), labeled_unknown_.begin(), labeled_unknown_.end());
    return out;
}

std::vector<int> Pool::labeled_all_labels() const {
    std::vector<int> out = labeled_known_labels_;
    out.insert(out.end(), labeled_unknown_.size(), unknown_label());
    return out;
}

Pool::OracleResult Pool::oracle_label(std::span<const std::size_t> indices) {
    std::unordered_set<std::size_t> requested;
    for (std::size_t id : indices) {
        if (!std::binary_search(unlabeled_.begin(), unlabeled_.end(), id)) {
            throw ValidationError("oracle_label: row " + std::to_string(id) +
                                  " is not in the unlabeled pool");
        }
        if (!requested.insert(id).second) {
            throw ValidationError("oracle_label: row " + std::to_string(id) +
                                  " requested twice");
        }
    }

    OracleResult result;
    result.labels.reserve(indices.size());
    for (std::size_t id : indices) {
        const int label = truth_[id];
        result.labels.push_back(label);
        if (label < num_known_) {
            labeled_known_.push_back(id);
            labeled_known_labels_.push_back(label);
            ++result.known;
        } else {
            labeled_unknown_.push_back(id);
        }
    }
    std::erase_if(unlabeled_, [&](std::size_t id) { return requested.contains(id); });
    result.precision = indices.empty() ? 0.0
                                       : static_cast<double>(result.known) /
                                             static_cast<double>(indices.size());
    return result;
}

nlohmann::json Pool::snapshot() const {
    nlohmann::json known = nlohmann::json::array();
    for (std::size_t i = 0; i < labeled_known_.size(); ++i) {
        known.push_back({{"index", labeled_known_[i]}, {"label", labeled_known_labels_[i]}});
    }
    return {
        {"num_known", num_known_},
        {"known_classes", known_classes_},
        {"labeled_known", std::move(known)},
        {"labeled_unknown", labeled_unknown_},
        {"unlabeled", unlabeled_},
        {"test_size", test_.size()},
        {"detector_eval_size", detector_eval_.size()},
    };
}

Pool build_pool(const Dataset& dataset, const SplitOptions& options) {
    dataset.validate();
    options.validate();
    const int known = known_class_count(options.mismatch_ratio, dataset.num_classes);
    if (known < 2) {
        throw ValidationError("dataset.mismatch_ratio leaves fewer than 2 known classes");
    }

    std::mt19937_64 rng(options.seed);
    std::vector<int> classes(static_cast<std::size_t>(dataset.num_classes));
    std::iota(classes.begin(), classes.end(), 0);
    std::shuffle(classes.begin(), classes.end(), rng);
    std::vector<int> known_classes(classes.begin(), classes.begin() + known);
    std::sort(known_classes.begin(), known_classes.end());

    std::vector<int> internal(static_cast<std::size_t>(dataset.num_classes), known);
    for (int i = 0; i < known; ++i) {
        internal[static_cast<std::size_t>(known_classes[static_cast<std::size_t>(i)])] = i;
    }

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.num_classes));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    }

    Pool pool;
    pool.features_ = dataset.features;
    pool.num_known_ = known;
    pool.known_classes_ = known_classes;
    pool.truth_.resize(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        pool.truth_[i] = internal[static_cast<std::size_t>(dataset.labels[i])];
    }

    std::vector<std::size_t> unlabeled;
    for (int c = 0; c < dataset.num_classes; ++c) {
        auto members = by_class[static_cast<std::size_t>(c)];
        std::shuffle(members.begin(), members.end(), rng);
        const auto held = static_cast<std::size_t>(
            std::llround(options.test_fraction * static_cast<double>(members.size())));
        const int label = internal[static_cast<std::size_t>(c)];
        for (std::size_t j = 0; j < held; ++j) {
            pool.detector_eval_.push_back(members[j]);
            if (label < known) {
                pool.test_.push_back(members[j]);
            }
        }
        std::size_t initial = 0;
        if (label < known && members.size() > held) {
            const double want =
                std::ceil(options.initial_fraction * static_cast<double>(members.size() - held) -
                          1e-9);
            initial = std::clamp<std::size_t>(static_cast<std::size_t>(want), 1,
                                              members.size() - held);
        }
        for (std::size_t j = held; j < held + initial; ++j) {
            pool.labeled_known_.push_back(members[j]);
        }
        for (std::size_t j = held + initial; j < members.size(); ++j) {
            unlabeled.push_back(members[j]);
        }
    }
    std::sort(pool.labeled_known_.begin(), pool.labeled_known_.end());
    std::sort(pool.test_.begin(), pool.test_.end());
    std::sort(pool.detector_eval_.begin(), pool.detector_eval_.end());
    std::sort(unlabeled.begin(), unlabeled.end());
    pool.unlabeled_ = std::move(unlabeled);
    for (std::size_t id : pool.labeled_known_) {
        pool.labeled_known_labels_.push_back(pool.truth_[id]);
    }
    for (std::size_t id : pool.test_) {
        pool.test_labels_.push_back(pool.truth_[id]);
    }
    for (std::size_t id : pool.detector_eval_) {
        pool.detector_eval_labels_.push_back(pool.truth_[id]);
    }
    if (pool.labeled_known_.empty()) {
        throw ValidationError("build_pool: no initial labeled examples could be drawn");
    }
    return pool;
}

Pool generate_synthetic(const OpenSetSpec& spec) { return build_pool(synthesize(spec), spec.split); }

Dataset read_dataset(std::istream& in) {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    long dim = -1;
    std::vector<double> values;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        if (dim < 0) {
            std::istringstream header{std::string(text)};
            std::string tag;
            header >> tag;
            if (tag != kHeaderTag) {
                throw ValidationError("dataset: expected header `eaoa-dataset dim=<D> classes=<N>`" +
                                      at_line(line_no));
            }
            std::string field;
            long classes = -1;
            while (header >> field) {
                const auto eq = field.find('=');
                long value = -1;
                if (eq == std::string::npos ||
                    !parse_number(std::string_view(field).substr(eq + 1), value)) {
                    throw ValidationError("dataset: malformed header field `" + field + "`" +
                                          at_line(line_no));
                }
                const std::string key = field.substr(0, eq);
                if (key == "dim") {
                    dim = value;
                } else if (key == "classes") {
                    classes = value;
                } else {
                    throw ValidationError("dataset: unknown header field `" + key + "`" +
                                          at_line(line_no));
                }
            }
            if (dim <= 0 || classes < 2) {
                throw ValidationError("dataset: header needs dim >= 1 and classes >= 2" +
                                      at_line(line_no));
            }
            ds.num_classes = static_cast<int>(classes);
            continue;
        }

        std::size_t fields = 0;
        std::string_view rest = text;
        const std::size_t row = ds.labels.size();
        while (true) {
            const auto comma = rest.find(',');
            const std::string_view cell = rest.substr(0, comma);
            if (static_cast<long>(fields) < dim) {
                double v = 0.0;
                if (!parse_number(cell, v)) {
                    throw ValidationError("dataset: cannot parse feature `" + std::string(trim(cell)) +
                                          "` in row " + std::to_string(row) + at_line(line_no));
                }
                if (!std::isfinite(v)) {
                    throw ValidationError("dataset: non-finite feature in row " +
                                          std::to_string(row) + at_line(line_no));
                }
                values.push_back(v);
            } else if (static_cast<long>(fields) == dim) {
                int label = -1;
                if (!parse_number(cell, label)) {
                    throw ValidationError("dataset: cannot parse label `" + std::string(trim(cell)) +
                                          "` in row " + std::to_string(row) + at_line(line_no));
                }
                if (label < 0 || label >= ds.num_classes) {
                    throw ValidationError("dataset: label " + std::to_string(label) + " in row " +
                                          std::to_string(row) + " outside [0, " +
                                          std::to_string(ds.num_classes) + ")" + at_line(line_no));
                }
                ds.labels.push_back(label);
            }
            ++fields;
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (static_cast<long>(fields) != dim + 1) {
            throw ValidationError("dataset: row " + std::to_string(row) + " has " +
                                  std::to_string(fields) + " fields, expected " +
                                  std::to_string(dim + 1) + at_line(line_no));
        }
    }
    if (dim < 0) {
        throw ValidationError("dataset: missing header line");
    }
    ds.features.resize(static_cast<Eigen::Index>(ds.labels.size()), dim);
    for (std::size_t i = 0; i < values.size(); ++i) {
        ds.features(static_cast<Eigen::Index>(i / static_cast<std::size_t>(dim)),
                    static_cast<Eigen::Index>(i % static_cast<std::size_t>(dim))) = values[i];
    }
    return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("dataset: cannot open " + path.string());
    }
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
    dataset.validate();
    out << kHeaderTag << " dim=" << dataset.features.cols() << " classes=" << dataset.num_classes
        << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (Eigen::Index d = 0; d < dataset.features.cols(); ++d) {
            out << dataset.features(static_cast<Eigen::Index>(i), d) << ',';
        }
        out << dataset.labels[i] << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) {
        throw Error("dataset: cannot write " + path.string());
    }
    write_dataset(out, dataset);
    if (!out) {
        throw Error("dataset: write failed for " + path.string());
    }
}

Pool load_feature_dataset(const std::filesystem::path& path, const SplitOptions& options) {
    return build_pool(read_dataset(path), options);
}

}  // namespace eaoa::data
