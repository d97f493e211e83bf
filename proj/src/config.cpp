#include "eaoa/config.hpp"
#include "eaoa/sampler.hpp"

#include <fstream>
#include <map>

namespace eaoa {

using nlohmann::json;

namespace {

const std::map<std::string, std::string, std::less<>>& axis_aliases() {
    static const std::map<std::string, std::string, std::less<>> aliases{
        {"tP", "sampler.tP"},
        {"k1", "sampler.k1"},
        {"a", "sampler.a"},
        {"z", "sampler.z"},
        {"K", "density.K"},
        {"smoothing", "density.smoothing"},
        {"m_kno", "energy.m_kno"},
        {"m_unk", "energy.m_unk"},
        {"lambda_e", "energy.lambda_e"},
        {"mismatch_ratio", "dataset.mismatch_ratio"},
        {"budget", "experiment.budget"},
        {"rounds", "experiment.rounds"},
        {"strategy", "experiment.strategy"},
    };
    return aliases;
}

bool compatible(const json& existing, const json& incoming) {
    if (existing.is_number_float()) {
        return incoming.is_number();
    }
    if (existing.is_number_integer()) {
        return incoming.is_number_integer();
    }
    if (existing.is_array()) {
        return incoming.is_array();
    }
    return existing.type() == incoming.type();
}

void merge_at(json& base, const json& patch, const std::string& prefix) {
    if (!patch.is_object()) {
        throw ValidationError("config: expected an object at `" +
                              (prefix.empty() ? std::string("<root>") : prefix) + "`");
    }
    for (const auto& [key, value] : patch.items()) {
        const std::string dotted = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) {
            throw ValidationError("config: unknown key `" + dotted + "`");
        }
        json& slot = base[key];
        if (slot.is_object()) {
            merge_at(slot, value, dotted);
        } else if (!compatible(slot, value)) {
            throw ValidationError("config: `" + dotted + "` expects " + slot.type_name() +
                                  ", got " + value.type_name());
        } else {
            slot = value;
        }
    }
}

json sgd_json(const nn::SgdConfig& s) {
    return {{"learning_rate", s.learning_rate}, {"momentum", s.momentum},
            {"weight_decay", s.weight_decay},   {"batch_size", s.batch_size},
            {"epochs", s.epochs},               {"lr_decay_factor", s.lr_decay_factor},
            {"lr_decay_every", s.lr_decay_every}};
}

nn::SgdConfig sgd_from(const json& j) {
    nn::SgdConfig s;
    s.learning_rate = j.at("learning_rate").get<double>();
    s.momentum = j.at("momentum").get<double>();
    s.weight_decay = j.at("weight_decay").get<double>();
    s.batch_size = j.at("batch_size").get<int>();
    s.epochs = j.at("epochs").get<int>();
    s.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    s.lr_decay_every = j.at("lr_decay_every").get<int>();
    return s;
}

void validate_arch(const training::ModelTemplate& arch, const char* who) {
    if (arch.hidden.empty()) {
        throw ValidationError(std::string(who) +
                              ".hidden needs at least one layer (features come from it)");
    }
    for (int h : arch.hidden) {
        if (h <= 0) {
            throw ValidationError(std::string(who) + ".hidden widths must be positive");
        }
    }
}

}  // namespace

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Random: return "random";
        case Strategy::Uncertainty: return "uncertainty";
        case Strategy::Certainty: return "certainty";
        case Strategy::Mav: return "mav";
        case Strategy::Eaoa: return "eaoa";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view name) {
    for (Strategy s : all_strategies()) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ValidationError("unknown strategy `" + std::string(name) +
                          "` (expected random, uncertainty, certainty, mav or eaoa)");
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all{Strategy::Random, Strategy::Uncertainty,
                                           Strategy::Certainty, Strategy::Mav, Strategy::Eaoa};
    return all;
}

json default_config_json() { return ExperimentConfig{}.to_json(); }

json ExperimentConfig::to_json() const {
    return {
        {"dataset",
         {{"path", dataset_path},
          {"total_classes", synthetic.total_classes},
          {"per_class", synthetic.per_class},
          {"dim", synthetic.dim},
          {"center_spread", synthetic.center_spread},
          {"within_std", synthetic.within_std},
          {"seed", synthetic.seed},
          {"mismatch_ratio", synthetic.split.mismatch_ratio},
          {"test_fraction", synthetic.split.test_fraction},
          {"initial_fraction", synthetic.split.initial_fraction}}},
        {"experiment",
         {{"strategy", to_string(strategy)},
          {"rounds", rounds},
          {"budget", budget},
          {"seeds", seeds},
          {"snapshots", write_snapshots},
          {"record_wall_clock", record_wall_clock}}},
        {"sampler", {{"tP", target_precision}, {"k1", k1}, {"a", amplitude}, {"z", threshold}}},
        {"density", {{"K", knn_k}, {"smoothing", arrow_smoothing}}},
        {"energy",
         {{"m_kno", margin.m_known},
          {"m_unk", margin.m_unknown},
          {"lambda_e", margin.lambda_e},
          {"use_eu", margin.use_eu}}},
        {"gmm",
         {{"max_iters", em.max_iters}, {"tol", em.tol}, {"variance_floor", em.variance_floor}}},
        {"detector", {{"hidden", detector_arch.hidden}, {"sgd", sgd_json(detector_sgd)}}},
        {"classifier", {{"hidden", classifier_arch.hidden}, {"sgd", sgd_json(classifier_sgd)}}},
    };
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    json full = default_config_json();
    merge_config(full, j);

    ExperimentConfig c;
    try {
        const auto& d = full.at("dataset");
        c.dataset_path = d.at("path").get<std::string>();
        c.synthetic.total_classes = d.at("total_classes").get<int>();
        c.synthetic.per_class = d.at("per_class").get<int>();
        c.synthetic.dim = d.at("dim").get<int>();
        c.synthetic.center_spread = d.at("center_spread").get<double>();
        c.synthetic.within_std = d.at("within_std").get<double>();
        c.synthetic.seed = d.at("seed").get<std::uint64_t>();
        c.synthetic.split.mismatch_ratio = d.at("mismatch_ratio").get<double>();
        c.synthetic.split.test_fraction = d.at("test_fraction").get<double>();
        c.synthetic.split.initial_fraction = d.at("initial_fraction").get<double>();
        c.synthetic.split.seed = c.synthetic.seed;

        const auto& e = full.at("experiment");
        c.strategy = parse_strategy(e.at("strategy").get<std::string>());
        c.rounds = e.at("rounds").get<int>();
        c.budget = e.at("budget").get<int>();
        c.seeds = e.at("seeds").get<std::vector<std::uint64_t>>();
        c.write_snapshots = e.at("snapshots").get<bool>();
        c.record_wall_clock = e.at("record_wall_clock").get<bool>();

        const auto& s = full.at("sampler");
        c.target_precision = s.at("tP").get<double>();
        c.k1 = s.at("k1").get<double>();
        c.amplitude = s.at("a").get<double>();
        c.threshold = s.at("z").get<double>();

        const auto& den = full.at("density");
        c.knn_k = den.at("K").get<std::size_t>();
        c.arrow_smoothing = den.at("smoothing").get<double>();

        const auto& en = full.at("energy");
        c.margin.m_known = en.at("m_kno").get<double>();
        c.margin.m_unknown = en.at("m_unk").get<double>();
        c.margin.lambda_e = en.at("lambda_e").get<double>();
        c.margin.use_eu = en.at("use_eu").get<bool>();

        const auto& g = full.at("gmm");
        c.em.max_iters = g.at("max_iters").get<int>();
        c.em.tol = g.at("tol").get<double>();
        c.em.variance_floor = g.at("variance_floor").get<double>();

        c.detector_arch.hidden = full.at("detector").at("hidden").get<std::vector<int>>();
        c.detector_sgd = sgd_from(full.at("detector").at("sgd"));
        c.classifier_arch.hidden = full.at("classifier").at("hidden").get<std::vector<int>>();
        c.classifier_sgd = sgd_from(full.at("classifier").at("sgd"));
    } catch (const json::exception& ex) {
        throw ValidationError(std::string("config: ") + ex.what());
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    if (dataset_path.empty()) {
        synthetic.validate();
    } else {
        synthetic.split.validate();
    }
    if (rounds < 1) {
        throw ValidationError("experiment.rounds must be at least 1");
    }
    if (budget < 1) {
        throw ValidationError("experiment.budget must be at least 1");
    }
    if (seeds.empty()) {
        throw ValidationError("experiment.seeds must list at least one seed");
    }
    sampler::SamplerState{k1, target_precision, amplitude, threshold, {}}.validate();
    if (knn_k < 1) {
        throw ValidationError("density.K must be at least 1");
    }
    if (!(arrow_smoothing > 0.0)) {
        throw ValidationError("density.smoothing must be positive");
    }
    margin.validate();
    if (em.max_iters < 1 || !(em.tol >= 0.0) || !(em.variance_floor > 0.0)) {
        throw ValidationError("gmm: max_iters >= 1, tol >= 0 and variance_floor > 0 required");
    }
    validate_arch(detector_arch, "detector");
    validate_arch(classifier_arch, "classifier");
    try {
        detector_sgd.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("detector.") + e.what());
    }
    try {
        classifier_sgd.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("classifier.") + e.what());
    }
}

void merge_config(json& base, const json& patch) { merge_at(base, patch, ""); }

void set_config_value(json& config, std::string_view dotted_key, const json& value) {
    json patch = value;
    std::string key(dotted_key);
    if (key.empty()) {
        throw ValidationError("config: empty override key");
    }
    // Build {"a": {"b": value}} from "a.b" and merge it.
    std::size_t end = key.size();
    while (true) {
        const auto dot = key.rfind('.', end - 1);
        const std::string part =
            key.substr(dot == std::string::npos ? 0 : dot + 1,
                       end - (dot == std::string::npos ? 0 : dot + 1));
        if (part.empty()) {
            throw ValidationError("config: malformed key `" + key + "`");
        }
        patch = json{{part, std::move(patch)}};
        if (dot == std::string::npos) {
            break;
        }
        end = dot;
    }
    merge_config(config, patch);
}

void apply_override(json& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ValidationError("override `" + std::string(assignment) +
                              "` must look like key.path=value");
    }
    const std::string_view key = assignment.substr(0, eq);
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    set_config_value(config, resolve_axis(key), value);
}

std::string resolve_axis(std::string_view axis) {
    const auto& aliases = axis_aliases();
    if (const auto it = aliases.find(axis); it != aliases.end()) {
        return it->second;
    }
    return std::string(axis);
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
    json config = default_config_json();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw ValidationError("config: cannot open " + path.string());
        }
        const json file = json::parse(in, nullptr, false);
        if (file.is_discarded()) {
            throw ValidationError("config: " + path.string() + " is not valid JSON");
        }
        merge_config(config, file);
    }
    for (const auto& o : overrides) {
        apply_override(config, o);
    }
    return ExperimentConfig::from_json(config);
}

}  // namespace eaoa
