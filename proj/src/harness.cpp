#include "eaoa/harness.hpp"

#include "eaoa/density.hpp"
#include "eaoa/energy.hpp"
#include "eaoa/score_fusion.hpp"
#include "eaoa/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace eaoa::harness {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPoolTag = 11;
constexpr std::uint64_t kDetectorTag = 21;
constexpr std::uint64_t kClassifierTag = 22;
constexpr std::uint64_t kSelectTag = 23;

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void train_models(RunState& state, const ExperimentConfig& config) {
    const std::uint64_t stage = derive_seed(state.seed, static_cast<std::uint64_t>(state.completed_rounds));
    training::DetectorLossConfig loss{config.margin, state.pool.detector_classes()};
    state.detector = training::train_detector(state.pool, config.detector_arch, config.detector_sgd,
                                              loss, derive_seed(stage, kDetectorTag))
                         .model;
    state.classifier = training::train_classifier(state.pool, config.classifier_arch,
                                                  config.classifier_sgd,
                                                  derive_seed(stage, kClassifierTag))
                           .model;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) {
        return out;
    }
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - out.mean) * (x - out.mean);
        }
        out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return out;
}

json stats_json(const std::vector<double>& xs) {
    const MeanStd ms = mean_std(xs);
    return {{"mean", ms.mean}, {"std", ms.std}, {"n", xs.size()}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

}  // namespace

data::Pool make_pool(const ExperimentConfig& config, std::uint64_t seed) {
    const std::uint64_t pool_seed = derive_seed(config.synthetic.seed, derive_seed(seed, kPoolTag));
    data::SplitOptions split = config.synthetic.split;
    split.seed = pool_seed;
    if (!config.dataset_path.empty()) {
        return data::load_feature_dataset(config.dataset_path, split);
    }
    data::OpenSetSpec spec = config.synthetic;
    spec.seed = pool_seed;
    spec.split = split;
    return data::generate_synthetic(spec);
}

RunState start_run(const ExperimentConfig& config, std::uint64_t seed) {
    return start_run(config, seed, make_pool(config, seed));
}

RunState start_run(const ExperimentConfig& config, std::uint64_t seed, data::Pool pool) {
    config.validate();
    RunState state;
    state.seed = seed;
    state.pool = std::move(pool);
    state.sampler = {config.k1, config.target_precision, config.amplitude, config.threshold, {}};
    train_models(state, config);
    return state;
}

std::vector<double> entropy_scores(const Matrix& logits) {
    std::vector<double> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const auto p = energy::softmax(row_span(logits, r));
        double h = 0.0;
        for (double v : p) {
            if (v > 0.0) {
                h -= v * std::log(v);
            }
        }
        out[static_cast<std::size_t>(r)] = h;
    }
    return out;
}

std::vector<double> mav_scores(const Matrix& detector_logits) {
    if (detector_logits.cols() < 2) {
        throw ShapeError("mav_scores: detector output needs at least two columns");
    }
    std::vector<double> out(static_cast<std::size_t>(detector_logits.rows()));
    for (Eigen::Index r = 0; r < detector_logits.rows(); ++r) {
        out[static_cast<std::size_t>(r)] =
            detector_logits.row(r).head(detector_logits.cols() - 1).maxCoeff();
    }
    return out;
}

sampler::ScoreTable score_unlabeled(const data::Pool& pool, const nn::Mlp& detector,
                                    const nn::Mlp& classifier, const ExperimentConfig& config) {
    const auto& unlabeled = pool.unlabeled();
    if (unlabeled.empty()) {
        throw ValidationError("score_unlabeled: unlabeled pool is empty");
    }
    const Matrix u = pool.rows(unlabeled);
    const Matrix det_logits = detector.forward(u);
    const Matrix cls_logits = classifier.forward(u);

    sampler::ScoreTable t;
    const std::size_t n = unlabeled.size();
    t.eu_learning.resize(n);
    t.au.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        t.eu_learning[i] = energy::epistemic_uncertainty(row_span(det_logits, r)).eu;
        t.au[i] = energy::aleatoric_uncertainty(row_span(cls_logits, r));
    }

    // Reverse-kNN runs on rows with non-zero features only: a dead ReLU layer has no
    // direction. Excluded labeled rows send no arrows; excluded unlabeled rows get none.
    const auto labeled = pool.labeled_all();
    const auto labeled_labels = pool.labeled_all_labels();
    const Matrix lf = density::extract_features(detector, pool.rows(labeled)).values;
    const Matrix uf = density::extract_features(detector, u).values;

    std::vector<Eigen::Index> live_l;
    std::vector<int> live_labels;
    for (Eigen::Index r = 0; r < lf.rows(); ++r) {
        if (lf.row(r).norm() > 0.0) {
            live_l.push_back(r);
            live_labels.push_back(labeled_labels[static_cast<std::size_t>(r)]);
        }
    }
    std::vector<Eigen::Index> live_u;
    for (Eigen::Index r = 0; r < uf.rows(); ++r) {
        if (uf.row(r).norm() > 0.0) {
            live_u.push_back(r);
        }
    }

    const auto classes = static_cast<std::size_t>(pool.detector_classes());
    density::ArrowCounts arrows(n, classes);
    if (!live_l.empty() && !live_u.empty()) {
        density::FeatureMatrix lfm{lf(live_l, Eigen::all), "penultimate"};
        density::FeatureMatrix ufm{uf(live_u, Eigen::all), "penultimate"};
        const std::size_t k = std::min(config.knn_k, live_u.size());
        const auto live = density::reverse_knn_arrows(lfm, live_labels, ufm, k, classes);
        for (std::size_t j = 0; j < live_u.size(); ++j) {
            for (std::size_t c = 0; c < classes; ++c) {
                arrows.at(static_cast<std::size_t>(live_u[j]), c) = live.at(j, c);
            }
        }
        arrows.class_totals() = live.class_totals();
        arrows.k = k;
    }
    t.eu_data = density::data_driven_eu(arrows, config.arrow_smoothing);

    t.eu_learning_prob = fusion::probabilistic_or_fallback(t.eu_learning, config.em).values;
    t.eu_data_prob = fusion::probabilistic_or_fallback(t.eu_data, config.em).values;
    t.eu_fused = fusion::fuse_eu(t.eu_learning_prob, t.eu_data_prob);
    t.au_prob = fusion::probabilistic_or_fallback(t.au, config.em).values;
    return t;
}

sampler::QuerySet baseline_select(Strategy strategy, const data::Pool& pool, Models models,
                                  std::size_t budget, std::uint64_t seed) {
    const auto& unlabeled = pool.unlabeled();
    if (unlabeled.empty()) {
        throw ValidationError("baseline_select: unlabeled pool is empty");
    }
    budget = std::min(budget, unlabeled.size());
    sampler::QuerySet out;
    switch (strategy) {
        case Strategy::Random: {
            std::vector<std::size_t> order(unlabeled.size());
            std::iota(order.begin(), order.end(), 0);
            std::mt19937_64 rng(seed);
            std::shuffle(order.begin(), order.end(), rng);
            order.resize(budget);
            out.indices = std::move(order);
            break;
        }
        case Strategy::Uncertainty:
        case Strategy::Certainty: {
            if (models.classifier == nullptr) {
                throw ValidationError("baseline_select: entropy strategies need a classifier");
            }
            const auto h = entropy_scores(models.classifier->forward(pool.rows(unlabeled)));
            out.indices = strategy == Strategy::Uncertainty ? sampler::highest(h, budget)
                                                            : sampler::lowest(h, budget);
            break;
        }
        case Strategy::Mav: {
            if (models.detector == nullptr) {
                throw ValidationError("baseline_select: mav needs a detector");
            }
            const auto s = mav_scores(models.detector->forward(pool.rows(unlabeled)));
            out.indices = sampler::highest(s, budget);
            break;
        }
        case Strategy::Eaoa:
            throw ValidationError("baseline_select: eaoa is not a baseline strategy");
    }
    out.stage1_indices = out.indices;
    return out;
}

RoundMetrics run_round(RunState& state, const ExperimentConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    auto& pool = state.pool;
    if (pool.unlabeled().empty()) {
        throw ValidationError("run_round: unlabeled pool is exhausted");
    }
    const int round = state.completed_rounds + 1;
    const auto budget = std::min(static_cast<std::size_t>(config.budget), pool.unlabeled().size());

    RoundMetrics m;
    m.round = round;
    m.strategy = config.strategy;
    m.seed = state.seed;

    sampler::QuerySet query;
    if (config.strategy == Strategy::Eaoa) {
        const auto scores = score_unlabeled(pool, state.detector, state.classifier, config);
        query = sampler::select(scores, state.sampler, budget);
        m.k = state.sampler.k;
    } else {
        const std::uint64_t select_seed =
            derive_seed(derive_seed(state.seed, static_cast<std::uint64_t>(round)), kSelectTag);
        query = baseline_select(config.strategy, pool, {&state.detector, &state.classifier},
                                budget, select_seed);
    }

    std::vector<std::size_t> rows;
    rows.reserve(query.indices.size());
    for (std::size_t pos : query.indices) {
        rows.push_back(pool.unlabeled()[pos]);
    }
    const auto oracle = pool.oracle_label(rows);
    m.precision = oracle.precision;
    if (config.strategy == Strategy::Eaoa) {
        sampler::update_k(state.sampler, oracle.precision, round);
    }
    state.completed_rounds = round;

    train_models(state, config);
    m.test_acc = nn::accuracy(state.classifier, pool.rows(pool.test()), pool.test_labels());
    m.detector_acc =
        nn::accuracy(state.detector, pool.rows(pool.detector_eval()), pool.detector_eval_labels());
    m.n_known = pool.labeled_known().size();
    m.n_unknown = pool.labeled_unknown().size();
    if (config.record_wall_clock) {
        m.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    return m;
}

std::vector<RoundMetrics> run_seed(const ExperimentConfig& config, std::uint64_t seed,
                                   const ProgressFn& progress,
                                   const std::filesystem::path& snapshot_dir) {
    RunState state = start_run(config, seed);
    const bool snapshots = config.write_snapshots && !snapshot_dir.empty();
    const auto snap = [&](int round) {
        write_text(snapshot_dir / ("seed_" + std::to_string(seed) + "_round_" +
                                   std::to_string(round) + ".json"),
                   state.pool.snapshot().dump(1) + "\n");
    };
    if (snapshots) {
        std::filesystem::create_directories(snapshot_dir);
        snap(0);
    }
    std::vector<RoundMetrics> out;
    for (int r = 0; r < config.rounds && !state.pool.unlabeled().empty(); ++r) {
        out.push_back(run_round(state, config));
        if (snapshots) {
            snap(out.back().round);
        }
        if (progress) {
            progress(out.back());
        }
    }
    return out;
}

std::string rounds_csv(const std::vector<RoundMetrics>& rounds) {
    std::ostringstream out;
    out << kRoundsCsvHeader << '\n';
    for (const auto& m : rounds) {
        out << m.round << ',' << to_string(m.strategy) << ',' << m.seed << ',' << fmt(m.precision)
            << ',' << fmt(m.k) << ',' << fmt(m.test_acc) << ',' << fmt(m.detector_acc) << ','
            << m.n_known << ',' << m.n_unknown << ',' << fmt(m.secs) << '\n';
    }
    return out.str();
}

json summarize(const ExperimentConfig& config, const std::vector<RoundMetrics>& rounds) {
    int max_round = 0;
    for (const auto& m : rounds) {
        max_round = std::max(max_round, m.round);
    }

    json per_round = json::array();
    for (int r = 1; r <= max_round; ++r) {
        std::vector<double> rp, acc, det, k, nk, nu;
        for (const auto& m : rounds) {
            if (m.round != r) {
                continue;
            }
            rp.push_back(m.precision);
            acc.push_back(m.test_acc);
            det.push_back(m.detector_acc);
            k.push_back(m.k);
            nk.push_back(static_cast<double>(m.n_known));
            nu.push_back(static_cast<double>(m.n_unknown));
        }
        per_round.push_back({{"round", r},
                             {"rP", stats_json(rp)},
                             {"test_acc", stats_json(acc)},
                             {"detector_acc", stats_json(det)},
                             {"k_t", stats_json(k)},
                             {"n_known", stats_json(nk)},
                             {"n_unknown", stats_json(nu)}});
    }

    std::vector<double> mqp, final_acc, mda;
    json k_history = json::object();
    json per_seed = json::array();
    for (std::uint64_t seed : config.seeds) {
        std::vector<double> rp, det, ks;
        double last_acc = 0.0;
        int last_round = 0;
        for (const auto& m : rounds) {
            if (m.seed != seed) {
                continue;
            }
            rp.push_back(m.precision);
            det.push_back(m.detector_acc);
            ks.push_back(m.k);
            if (m.round > last_round) {
                last_round = m.round;
                last_acc = m.test_acc;
            }
        }
        if (rp.empty()) {
            continue;
        }
        const double seed_mqp = mean_std(rp).mean;
        mqp.push_back(seed_mqp);
        final_acc.push_back(last_acc);
        mda.push_back(mean_std(det).mean);
        k_history[std::to_string(seed)] = ks;
        per_seed.push_back({{"seed", seed},
                            {"mQP", seed_mqp},
                            {"final_test_acc", last_acc},
                            {"mDA", mda.back()}});
    }

    return {{"strategy", to_string(config.strategy)},
            {"config", config.to_json()},
            {"seeds", config.seeds},
            {"rounds", std::move(per_round)},
            {"mQP", stats_json(mqp)},
            {"final_test_acc", stats_json(final_acc)},
            {"mDA", stats_json(mda)},
            {"per_seed", std::move(per_seed)},
            {"k_history", std::move(k_history)}};
}

std::string curves_csv(const json& summary) {
    std::ostringstream out;
    out << "round,test_acc_mean,test_acc_std,rP_mean,rP_std,detector_acc_mean,detector_acc_std,"
           "k_t_mean\n";
    for (const auto& r : summary.at("rounds")) {
        out << r.at("round").get<int>() << ',' << fmt(r.at("test_acc").at("mean").get<double>())
            << ',' << fmt(r.at("test_acc").at("std").get<double>()) << ','
            << fmt(r.at("rP").at("mean").get<double>()) << ','
            << fmt(r.at("rP").at("std").get<double>()) << ','
            << fmt(r.at("detector_acc").at("mean").get<double>()) << ','
            << fmt(r.at("detector_acc").at("std").get<double>()) << ','
            << fmt(r.at("k_t").at("mean").get<double>()) << '\n';
    }
    return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir, int jobs,
                                const ProgressFn& progress) {
    config.validate();
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
    }
    const std::filesystem::path snapshot_dir =
        out_dir.empty() ? std::filesystem::path{} : out_dir / "snapshots";

    const std::size_t n = config.seeds.size();
    std::vector<std::vector<RoundMetrics>> per_seed(n);
    std::vector<std::exception_ptr> errors(n);
    std::mutex progress_mutex;
    const ProgressFn locked = [&](const RoundMetrics& m) {
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(m);
        }
    };

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                per_seed[i] = run_seed(config, config.seeds[i], locked, snapshot_dir);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(n)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    ExperimentResult result;
    for (auto& rounds : per_seed) {
        result.rounds.insert(result.rounds.end(), rounds.begin(), rounds.end());
    }
    result.summary = summarize(config, result.rounds);
    if (!out_dir.empty()) {
        write_text(out_dir / "rounds.csv", rounds_csv(result.rounds));
        write_text(out_dir / "summary.json", result.summary.dump(2) + "\n");
        write_text(out_dir / "curves.csv", curves_csv(result.summary));
    }
    return result;
}

}  // namespace eaoa::harness
