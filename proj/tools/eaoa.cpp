#include "eaoa/commands.hpp"
#include "eaoa/config.hpp"
#include "eaoa/data.hpp"
#include "eaoa/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

nlohmann::json load_json_config(const std::string& path, const std::vector<std::string>& overrides) {
    nlohmann::json config = eaoa::default_config_json();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw eaoa::ValidationError("config: cannot open " + path);
        }
        const auto file = nlohmann::json::parse(in, nullptr, false);
        if (file.is_discarded()) {
            throw eaoa::ValidationError("config: " + path + " is not valid JSON");
        }
        eaoa::merge_config(config, file);
    }
    for (const auto& o : overrides) {
        eaoa::apply_override(config, o);
    }
    // Full validation up front so bad values fail before any work starts.
    eaoa::ExperimentConfig::from_json(config);
    return config;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char c : text) {
        if (c == ',') {
            if (!item.empty()) {
                out.push_back(item);
            }
            item.clear();
        } else if (c != ' ' && c != '[' && c != ']') {
            item += c;
        }
    }
    if (!item.empty()) {
        out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-based active open-set annotation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    int jobs = 1;
    bool timing = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "JSON experiment config");
        cmd->add_option("-s,--set", overrides, "Override a config value: dotted.key=value");
        cmd->add_option("-o,--out", out_dir, "Output directory (default $EAOA_OUTPUT_ROOT/<cmd>)");
        cmd->add_option("-j,--jobs", jobs, "Seeds run concurrently")->check(CLI::PositiveNumber);
        cmd->add_flag("--timing", timing, "Record wall-clock seconds per round");
    };

    auto* run = app.add_subcommand("run", "Run one experiment");
    add_common(run);

    std::string strategies = "random,uncertainty,certainty,mav,eaoa";
    auto* sweep = app.add_subcommand("sweep", "Run the same experiment under several strategies");
    add_common(sweep);
    sweep->add_option("--strategies", strategies, "Comma-separated strategy names");

    std::string axis;
    std::string values;
    auto* ablate = app.add_subcommand("ablate", "One experiment per value of a config axis");
    add_common(ablate);
    ablate->add_option("--axis", axis, "Axis name (tP, K, lambda_e, ...) or dotted key")->required();
    ablate->add_option("--values", values, "Comma-separated values")->required();

    std::string results_dir;
    auto* report = app.add_subcommand("report", "Tabulate stored results");
    report->add_option("dir", results_dir, "Directory containing summary.json files")->required();

    std::string dataset_out;
    auto* dataset = app.add_subcommand("dataset", "Write the synthetic dataset as a feature file");
    dataset->add_option("-c,--config", config_path, "JSON experiment config");
    dataset->add_option("-s,--set", overrides, "Override a config value: dotted.key=value");
    dataset->add_option("file", dataset_out, "Output path")->required();

    auto* defaults = app.add_subcommand("defaults", "Print the default config as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*defaults) {
            std::cout << eaoa::default_config_json().dump(2) << '\n';
            return 0;
        }
        if (*report) {
            const auto out = eaoa::commands::report(results_dir, std::cerr);
            std::cout << out.table;
            return 0;
        }

        auto config = load_json_config(config_path, overrides);
        if (timing) {
            eaoa::set_config_value(config, "experiment.record_wall_clock", true);
        }

        if (*dataset) {
            auto cfg = eaoa::ExperimentConfig::from_json(config);
            eaoa::data::write_dataset(dataset_out, eaoa::data::synthesize(cfg.synthetic));
            std::cerr << "wrote " << dataset_out << '\n';
            return 0;
        }
        if (*run) {
            const auto cfg = eaoa::ExperimentConfig::from_json(config);
            eaoa::commands::run(cfg, eaoa::commands::resolve_output_dir(out_dir, "run"), jobs,
                                std::cerr);
            return 0;
        }
        if (*sweep) {
            std::vector<eaoa::Strategy> list;
            for (const auto& name : split_list(strategies)) {
                list.push_back(eaoa::parse_strategy(name));
            }
            eaoa::commands::sweep(config, list, eaoa::commands::resolve_output_dir(out_dir, "sweep"),
                                  jobs, std::cerr);
            return 0;
        }
        if (*ablate) {
            eaoa::commands::ablate(config, axis, split_list(values),
                                   eaoa::commands::resolve_output_dir(out_dir, "ablate"), jobs,
                                   std::cerr);
            return 0;
        }
    } catch (const eaoa::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
