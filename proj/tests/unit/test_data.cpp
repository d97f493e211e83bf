#include "eaoa/data.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

namespace da = eaoa::data;

namespace {

da::OpenSetSpec small_spec(std::uint64_t seed = 3) {
    da::OpenSetSpec s;
    s.total_classes = 10;
    s.per_class = 40;
    s.dim = 4;
    s.center_spread = 3.0;
    s.seed = seed;
    s.split.seed = seed;
    return s;
}

std::size_t total_rows(const da::Pool& p) {
    return p.labeled_known().size() + p.labeled_unknown().size() + p.unlabeled().size() +
           p.detector_eval().size();
}

void check_disjoint(const da::Pool& p) {
    std::set<std::size_t> seen;
    std::size_t n = 0;
    for (const auto* part : {&p.labeled_known(), &p.labeled_unknown(), &p.unlabeled(),
                             &p.detector_eval()}) {
        seen.insert(part->begin(), part->end());
        n += part->size();
    }
    CHECK(seen.size() == n);
    CHECK(n == static_cast<std::size_t>(p.features().rows()));
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("known class count") {
    CHECK(da::known_class_count(0.4, 10) == 4);
    CHECK(da::known_class_count(0.3, 10) == 3);
    CHECK(da::known_class_count(0.2, 10) == 2);
}

TEST_CASE("synthetic pool layout") {
    const auto spec = small_spec();
    const auto pool = da::generate_synthetic(spec);
    CHECK(pool.num_known() == 4);
    CHECK(pool.detector_classes() == 5);
    CHECK(pool.known_classes().size() == 4);
    check_disjoint(pool);
    // Per class: 8 held out, 32 train, 2 of those labeled for known classes.
    CHECK(pool.detector_eval().size() == 80);
    CHECK(pool.test().size() == 32);
    CHECK(pool.labeled_known().size() == 8);
    CHECK(pool.labeled_unknown().empty());
    CHECK(std::is_sorted(pool.unlabeled().begin(), pool.unlabeled().end()));
    for (int y : pool.test_labels()) {
        CHECK(y >= 0);
        CHECK(y < pool.num_known());
    }
    std::set<int> eval_labels(pool.detector_eval_labels().begin(),
                              pool.detector_eval_labels().end());
    CHECK(eval_labels.count(pool.unknown_label()) == 1);
}

TEST_CASE("same seed gives identical pools; different seeds differ") {
    CHECK(da::generate_synthetic(small_spec(5)) == da::generate_synthetic(small_spec(5)));
    CHECK_FALSE(da::generate_synthetic(small_spec(5)) == da::generate_synthetic(small_spec(6)));
}

TEST_CASE("zero spread is allowed") {
    auto spec = small_spec();
    spec.center_spread = 0.0;
    CHECK_NOTHROW(da::generate_synthetic(spec));
}

TEST_CASE("invalid specs are rejected naming the field") {
    auto spec = small_spec();
    spec.split.mismatch_ratio = 1.5;
    try {
        da::generate_synthetic(spec);
        FAIL("expected a validation error");
    } catch (const eaoa::ValidationError& e) {
        CHECK(std::string(e.what()).find("mismatch_ratio") != std::string::npos);
    }
    spec = small_spec();
    spec.dim = 0;
    CHECK_THROWS_AS(da::generate_synthetic(spec), eaoa::ValidationError);
}

TEST_CASE("oracle bookkeeping on a mixed batch") {
    const auto spec = small_spec();
    const auto ds = da::synthesize(spec);
    auto pool = da::build_pool(ds, spec.split);
    const auto& known = pool.known_classes();
    std::vector<std::size_t> pick_known;
    std::vector<std::size_t> pick_unknown;
    for (std::size_t id : pool.unlabeled()) {
        const bool is_known =
            std::find(known.begin(), known.end(), ds.labels[id]) != known.end();
        if (is_known && pick_known.size() < 6) {
            pick_known.push_back(id);
        } else if (!is_known && pick_unknown.size() < 4) {
            pick_unknown.push_back(id);
        }
    }
    std::vector<std::size_t> batch = pick_known;
    batch.insert(batch.end(), pick_unknown.begin(), pick_unknown.end());
    const auto nk = pool.labeled_known().size();
    const auto nu = pool.labeled_unknown().size();
    const auto nl = pool.unlabeled().size();
    const auto r = pool.oracle_label(batch);
    CHECK(r.precision == doctest::Approx(0.6));
    CHECK(r.known == 6);
    CHECK(pool.labeled_known().size() == nk + 6);
    CHECK(pool.labeled_unknown().size() == nu + 4);
    CHECK(pool.unlabeled().size() == nl - 10);
    for (std::size_t i = 0; i < 6; ++i) {
        const auto pos = std::find(known.begin(), known.end(), ds.labels[batch[i]]) - known.begin();
        CHECK(r.labels[i] == pos);
    }
    for (std::size_t i = 6; i < 10; ++i) {
        CHECK(r.labels[i] == pool.unknown_label());
    }
    check_disjoint(pool);

    // Pure batches.
    std::vector<std::size_t> all_unknown;
    std::vector<std::size_t> all_known;
    for (std::size_t id : pool.unlabeled()) {
        const bool is_known =
            std::find(known.begin(), known.end(), ds.labels[id]) != known.end();
        if (is_known && all_known.size() < 5) {
            all_known.push_back(id);
        } else if (!is_known && all_unknown.size() < 5) {
            all_unknown.push_back(id);
        }
    }
    CHECK(pool.oracle_label(all_known).precision == 1.0);
    const auto before = pool.labeled_unknown().size();
    CHECK(pool.oracle_label(all_unknown).precision == 0.0);
    CHECK(pool.labeled_unknown().size() == before + 5);

    // Already-labeled or duplicated rows are rejected.
    CHECK_THROWS_AS(pool.oracle_label(all_known), eaoa::ValidationError);
    const std::vector<std::size_t> dup{pool.unlabeled()[0], pool.unlabeled()[0]};
    CHECK_THROWS_AS(pool.oracle_label(dup), eaoa::ValidationError);
    CHECK(total_rows(pool) == ds.size());
}

TEST_CASE("snapshot lists partitions without hidden labels") {
    const auto pool = da::generate_synthetic(small_spec());
    const auto snap = pool.snapshot();
    CHECK(snap.contains("unlabeled"));
    CHECK(snap.at("unlabeled").size() == pool.unlabeled().size());
    CHECK(snap.dump().find("truth") == std::string::npos);
}

TEST_CASE("dataset text round trip") {
    const auto spec = small_spec();
    const auto ds = da::synthesize(spec);
    std::stringstream buf;
    da::write_dataset(buf, ds);
    CHECK(da::read_dataset(buf) == ds);

    const auto path = std::filesystem::temp_directory_path() / "eaoa_roundtrip.csv";
    da::write_dataset(path, ds);
    CHECK(da::load_feature_dataset(path, spec.split) == da::generate_synthetic(spec));
    std::filesystem::remove(path);
}

TEST_CASE("small hand-written file") {
    std::istringstream in(
        "# comment\n"
        "eaoa-dataset dim=2 classes=3\n"
        "0.5,1.0,0\n"
        "1.5, -2,1\n"
        "\n"
        "3,4,2\n"
        "3,5,2\n");
    const auto ds = da::read_dataset(in);
    CHECK(ds.size() == 4);
    CHECK(ds.num_classes == 3);
    CHECK(ds.features(1, 1) == -2.0);
    CHECK(ds.labels == std::vector<int>{0, 1, 2, 2});
}

TEST_CASE("malformed files name the row and line") {
    const auto message = [](const std::string& text) {
        std::istringstream in(text);
        try {
            da::read_dataset(in);
        } catch (const eaoa::ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    const auto nan = message("eaoa-dataset dim=2 classes=2\n1,2,0\n1,nan,1\n");
    CHECK(nan.find("non-finite") != std::string::npos);
    CHECK(nan.find("row 1") != std::string::npos);
    CHECK(nan.find("line 3") != std::string::npos);
    CHECK(message("eaoa-dataset dim=2 classes=2\n1,2,5\n").find("label 5") != std::string::npos);
    CHECK(message("eaoa-dataset dim=2 classes=2\n1,2,3,0\n").find("row 0") != std::string::npos);
    CHECK(message("eaoa-dataset dim=2 classes=2\n1,x,0\n").find("line 2") != std::string::npos);
    CHECK_FALSE(message("1,2,0\n").empty());
    CHECK_THROWS_AS(da::read_dataset(std::filesystem::path("/nonexistent/eaoa.csv")), eaoa::Error);
}

}  // TEST_SUITE
