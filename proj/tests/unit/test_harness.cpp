#include "eaoa/harness.hpp"
#include "tiny_config.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

namespace ha = eaoa::harness;
namespace da = eaoa::data;
using eaoa::Matrix;
using testing_support::tiny_config;

namespace {

/// Truth oracle kept by the test: regenerate the pool's dataset to look up classes.
std::vector<int> hidden_truth(const eaoa::ExperimentConfig& cfg, std::uint64_t seed) {
    // Mirrors the seed derivation documented for make_pool.
    const auto pool_seed =
        eaoa::derive_seed(cfg.synthetic.seed, eaoa::derive_seed(seed, 11));
    auto spec = cfg.synthetic;
    spec.seed = pool_seed;
    return da::synthesize(spec).labels;
}

bool is_known(const da::Pool& pool, int original) {
    const auto& k = pool.known_classes();
    return std::find(k.begin(), k.end(), original) != k.end();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("entropy and mav scores") {
    Matrix uniform = Matrix::Zero(3, 4);
    for (double h : ha::entropy_scores(uniform)) {
        CHECK(h == doctest::Approx(std::log(4.0)));
    }
    Matrix logits(4, 4);
    logits << 1.0, 5.0, 0.0, 9.0,   //
        3.0, -1.0, 2.0, 0.0,        //
        -2.0, -3.0, 7.0, 8.0,       //
        0.5, 0.25, 4.0, -9.0;
    // Largest known activation ignores the last (unknown) column.
    CHECK(ha::mav_scores(logits) == std::vector<double>{5.0, 3.0, 7.0, 4.0});
}

TEST_CASE("baseline tie rules and extremes") {
    const auto cfg = tiny_config();
    auto pool = ha::make_pool(cfg, 1);
    const auto zero = eaoa::nn::Mlp::zeros({4, pool.num_known()});
    const auto q = ha::baseline_select(eaoa::Strategy::Uncertainty, pool, {nullptr, &zero}, 5, 1);
    CHECK(q.indices == std::vector<std::size_t>{0, 1, 2, 3, 4});

    const auto state = ha::start_run(cfg, 1);
    const ha::Models models{&state.detector, &state.classifier};
    const auto unc = ha::baseline_select(eaoa::Strategy::Uncertainty, state.pool, models, 10, 1);
    const auto cer = ha::baseline_select(eaoa::Strategy::Certainty, state.pool, models, 10, 1);
    std::set<std::size_t> a(unc.indices.begin(), unc.indices.end());
    for (std::size_t i : cer.indices) {
        CHECK(a.count(i) == 0);
    }

    const auto mav = ha::baseline_select(eaoa::Strategy::Mav, state.pool, models, 10, 1);
    const auto scores = ha::mav_scores(state.detector.forward(state.pool.rows(state.pool.unlabeled())));
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
    order.resize(10);
    CHECK(mav.indices == order);

    const auto r1 = ha::baseline_select(eaoa::Strategy::Random, state.pool, models, 10, 7);
    const auto r2 = ha::baseline_select(eaoa::Strategy::Random, state.pool, models, 10, 7);
    const auto r3 = ha::baseline_select(eaoa::Strategy::Random, state.pool, models, 10, 8);
    CHECK(r1.indices == r2.indices);
    CHECK(r1.indices != r3.indices);
    CHECK(std::set<std::size_t>(r1.indices.begin(), r1.indices.end()).size() == 10);
    CHECK_THROWS(ha::baseline_select(eaoa::Strategy::Eaoa, state.pool, models, 10, 1));
}

TEST_CASE("two-round micro trace") {
    const auto cfg = tiny_config();
    const auto truth = hidden_truth(cfg, 1);
    auto state = ha::start_run(cfg, 1);
    REQUIRE(state.pool.unlabeled().size() + state.pool.labeled_known().size() == 60);
    double k = cfg.k1;
    for (int round = 1; round <= 2; ++round) {
        // Predict the query independently of run_round.
        const auto scores =
            ha::score_unlabeled(state.pool, state.detector, state.classifier, cfg);
        const std::size_t candidates = eaoa::sampler::candidate_count(k, 10, scores.size());
        const auto stage1 = eaoa::sampler::lowest(scores.eu_fused, candidates);
        std::vector<double> au;
        for (std::size_t i : stage1) {
            au.push_back(scores.au_prob[i]);
        }
        std::set<std::size_t> expected;
        for (std::size_t j : eaoa::sampler::highest(au, 10)) {
            expected.insert(state.pool.unlabeled()[stage1[j]]);
        }
        std::size_t expected_known = 0;
        for (std::size_t id : expected) {
            expected_known += is_known(state.pool, truth[id]) ? 1 : 0;
        }

        const auto before_unlabeled = state.pool.unlabeled();
        const auto nk = state.pool.labeled_known().size();
        const auto nu = state.pool.labeled_unknown().size();
        const auto m = ha::run_round(state, cfg);

        std::set<std::size_t> queried;
        for (std::size_t id : before_unlabeled) {
            if (!std::binary_search(state.pool.unlabeled().begin(), state.pool.unlabeled().end(),
                                    id)) {
                queried.insert(id);
            }
        }
        CHECK(queried == expected);
        CHECK(m.round == round);
        CHECK(m.k == k);
        CHECK(m.precision == doctest::Approx(static_cast<double>(expected_known) / 10.0));
        CHECK(state.pool.unlabeled().size() == before_unlabeled.size() - 10);
        CHECK(m.n_known == nk + expected_known);
        CHECK(m.n_unknown == nu + 10 - expected_known);
        if (m.precision - 0.6 > 0.05 + 1e-12) {
            k += 1.0;
        } else if (0.6 - m.precision > 0.05 + 1e-12) {
            k = std::max(1.0, k - 1.0);
        }
        CHECK(state.sampler.k == k);
        CHECK(state.sampler.history.size() == static_cast<std::size_t>(round));
    }
}

TEST_CASE("large k makes the round pure aleatoric selection") {
    auto cfg = tiny_config();
    cfg.k1 = 100.0;
    auto state = ha::start_run(cfg, 2);
    const auto scores = ha::score_unlabeled(state.pool, state.detector, state.classifier, cfg);
    std::set<std::size_t> expected;
    for (std::size_t j : eaoa::sampler::highest(scores.au_prob, 10)) {
        expected.insert(state.pool.unlabeled()[j]);
    }
    const auto before = state.pool.unlabeled();
    ha::run_round(state, cfg);
    std::set<std::size_t> queried;
    for (std::size_t id : before) {
        if (!std::binary_search(state.pool.unlabeled().begin(), state.pool.unlabeled().end(), id)) {
            queried.insert(id);
        }
    }
    CHECK(queried == expected);
}

TEST_CASE("conservation and early stop on exhaustion") {
    auto cfg = tiny_config();
    cfg.strategy = eaoa::Strategy::Random;
    cfg.rounds = 20;
    const auto rounds = ha::run_seed(cfg, 3);
    const auto start = ha::make_pool(cfg, 3);
    // 56 unlabeled rows at budget 10: five full rounds and one of six.
    REQUIRE(rounds.size() == 6);
    const auto last = rounds.back();
    CHECK(last.n_known + last.n_unknown ==
          start.labeled_known().size() + start.unlabeled().size());
    for (std::size_t r = 0; r + 1 < 5; ++r) {
        CHECK(rounds[r + 1].n_known + rounds[r + 1].n_unknown ==
              rounds[r].n_known + rounds[r].n_unknown + 10);
    }
    for (const auto& m : rounds) {
        CHECK(m.k == 0.0);
        CHECK(m.precision >= 0.0);
        CHECK(m.precision <= 1.0);
    }
}

TEST_CASE("pools are shared across strategies") {
    auto cfg = tiny_config();
    const auto a = ha::make_pool(cfg, 4);
    cfg.strategy = eaoa::Strategy::Mav;
    CHECK(ha::make_pool(cfg, 4) == a);
    CHECK_FALSE(ha::make_pool(cfg, 5) == a);
}

TEST_CASE("experiment outputs are deterministic and summarized per round") {
    auto cfg = tiny_config();
    cfg.seeds = {1, 2, 3};
    cfg.write_snapshots = true;
    const auto d1 = testing_support::scratch_dir("det1");
    const auto d2 = testing_support::scratch_dir("det2");
    const auto r1 = ha::run_experiment(cfg, d1, 1);
    ha::run_experiment(cfg, d2, 3);
    for (const char* f : {"rounds.csv", "summary.json", "curves.csv",
                          "snapshots/seed_2_round_1.json"}) {
        const auto a = testing_support::slurp(d1 / f);
        CHECK(!a.empty());
        CHECK(a == testing_support::slurp(d2 / f));
    }
    const auto csv = testing_support::slurp(d1 / "rounds.csv");
    CHECK(csv.rfind(std::string(ha::kRoundsCsvHeader) + "\n", 0) == 0);
    for (const auto& r : r1.summary.at("rounds")) {
        CHECK(r.at("rP").at("n").get<int>() == 3);
    }
    CHECK(r1.summary.at("config").at("sampler").at("tP").get<double>() == 0.6);
    CHECK(r1.summary.at("k_history").size() == 3);
}

}  // TEST_SUITE
