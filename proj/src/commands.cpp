#include "eaoa/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace eaoa::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

harness::ProgressFn progress_printer(std::ostream& log) {
    return [&log](const harness::RoundMetrics& m) {
        log << "[" << to_string(m.strategy) << " seed " << m.seed << "] round " << m.round
            << "  rP=" << fmt_fixed(m.precision) << "  k=" << fmt(m.k)
            << "  test_acc=" << fmt_fixed(m.test_acc) << "  det_acc=" << fmt_fixed(m.detector_acc)
            << "  known=" << m.n_known << "  unknown=" << m.n_unknown << '\n';
    };
}

std::string summary_row(const std::string& label, const json& summary) {
    return label + "," + summary.at("strategy").get<std::string>() + "," +
           fmt(summary.at("mQP").at("mean").get<double>()) + "," +
           fmt(summary.at("mQP").at("std").get<double>()) + "," +
           fmt(summary.at("final_test_acc").at("mean").get<double>()) + "," +
           fmt(summary.at("final_test_acc").at("std").get<double>()) + "," +
           fmt(summary.at("mDA").at("mean").get<double>()) + "\n";
}

constexpr const char* kSummaryCsvColumns =
    "strategy,mQP_mean,mQP_std,final_test_acc_mean,final_test_acc_std,mDA_mean\n";

}  // namespace

fs::path resolve_output_dir(const fs::path& out, const std::string& leaf) {
    if (!out.empty()) {
        return out;
    }
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
        return fs::path(root) / leaf;
    }
    return fs::path("results") / leaf;
}

harness::ExperimentResult run(const ExperimentConfig& config, const fs::path& out_dir, int jobs,
                              std::ostream& log) {
    auto result = harness::run_experiment(config, out_dir, jobs, progress_printer(log));
    log << "wrote " << (out_dir / "rounds.csv").string() << ", summary.json, curves.csv\n";
    return result;
}

std::vector<harness::ExperimentResult> sweep(const json& config,
                                             const std::vector<Strategy>& strategies,
                                             const fs::path& out_dir, int jobs, std::ostream& log) {
    if (strategies.empty()) {
        throw ValidationError("sweep: no strategies given");
    }
    std::vector<harness::ExperimentResult> results;
    std::string table = std::string("label,") + kSummaryCsvColumns;
    for (Strategy s : strategies) {
        json member = config;
        set_config_value(member, "experiment.strategy", to_string(s));
        const auto cfg = ExperimentConfig::from_json(member);
        results.push_back(run(cfg, out_dir / to_string(s), jobs, log));
        table += summary_row(to_string(s), results.back().summary);
    }
    fs::create_directories(out_dir);
    write_text(out_dir / "sweep.csv", table);
    return results;
}

std::vector<harness::ExperimentResult> ablate(const json& config, const std::string& axis,
                                              const std::vector<std::string>& values,
                                              const fs::path& out_dir, int jobs,
                                              std::ostream& log) {
    if (values.empty()) {
        throw ValidationError("ablate: no values given for axis `" + axis + "`");
    }
    const std::string key = resolve_axis(axis);
    {
        // Reject unknown axes before running anything.
        json probe = config;
        const auto current = [&]() -> json {
            const json* node = &probe;
            std::istringstream parts(key);
            std::string part;
            while (std::getline(parts, part, '.')) {
                if (!node->is_object() || !node->contains(part)) {
                    throw ValidationError("ablate: unknown axis `" + axis + "`");
                }
                node = &(*node)[part];
            }
            return *node;
        }();
        if (current.is_object()) {
            throw ValidationError("ablate: axis `" + axis + "` names a section, not a value");
        }
    }

    std::vector<harness::ExperimentResult> results;
    std::string table = "axis,value," + std::string(kSummaryCsvColumns);
    for (const auto& v : values) {
        json member = config;
        apply_override(member, key + "=" + v);
        const auto cfg = ExperimentConfig::from_json(member);
        results.push_back(run(cfg, out_dir / (axis + "=" + v), jobs, log));
        table += axis + "," + summary_row(v, results.back().summary);
    }
    fs::create_directories(out_dir);
    write_text(out_dir / "ablation.csv", table);
    return results;
}

ReportOutput report(const fs::path& results_dir, std::ostream& log) {
    if (!fs::is_directory(results_dir)) {
        throw ValidationError("report: " + results_dir.string() + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(results_dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "summary.json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw ValidationError("report: no summary.json found under " + results_dir.string());
    }

    ReportOutput out;
    std::ostringstream table;
    table << "| run | strategy | final test acc | mQP | mDA |\n"
          << "|---|---|---|---|---|\n";
    out.accuracy_csv = "label,strategy,round,mean,std\n";
    out.precision_csv = "label,strategy,round,mean,std\n";
    std::size_t used = 0;
    for (const auto& file : files) {
        json s;
        try {
            std::ifstream in(file);
            s = json::parse(in);
            const auto label = fs::relative(file.parent_path(), results_dir).generic_string();
            const auto strategy = s.at("strategy").get<std::string>();
            std::ostringstream row;
            row << "| " << (label == "." ? std::string("(root)") : label) << " | " << strategy
                << " | " << fmt_fixed(s.at("final_test_acc").at("mean").get<double>()) << " ± "
                << fmt_fixed(s.at("final_test_acc").at("std").get<double>()) << " | "
                << fmt_fixed(s.at("mQP").at("mean").get<double>()) << " ± "
                << fmt_fixed(s.at("mQP").at("std").get<double>()) << " | "
                << fmt_fixed(s.at("mDA").at("mean").get<double>()) << " |\n";
            std::string acc;
            std::string prec;
            for (const auto& r : s.at("rounds")) {
                const auto prefix = label + "," + strategy + "," + std::to_string(r.at("round").get<int>()) + ",";
                acc += prefix + fmt(r.at("test_acc").at("mean").get<double>()) + "," +
                       fmt(r.at("test_acc").at("std").get<double>()) + "\n";
                prec += prefix + fmt(r.at("rP").at("mean").get<double>()) + "," +
                        fmt(r.at("rP").at("std").get<double>()) + "\n";
            }
            table << row.str();
            out.accuracy_csv += acc;
            out.precision_csv += prec;
            ++used;
        } catch (const std::exception& e) {
            log << "warning: skipping " << file.string() << ": " << e.what() << '\n';
            out.skipped.push_back(file);
        }
    }
    if (used == 0) {
        throw ValidationError("report: every summary under " + results_dir.string() +
                              " was unreadable");
    }
    out.table = table.str();
    write_text(results_dir / "report_table.md", out.table);
    write_text(results_dir / "report_accuracy.csv", out.accuracy_csv);
    write_text(results_dir / "report_precision.csv", out.precision_csv);
    return out;
}

}  // namespace eaoa::commands
