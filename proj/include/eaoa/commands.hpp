#pragma once

#include "eaoa/config.hpp"
#include "eaoa/harness.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

// Library side of the `eaoa` command-line tool. Every subcommand is a plain call
// here; the executable only parses flags and maps exceptions to exit codes.

namespace eaoa::commands {

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "EAOA_OUTPUT_ROOT";

/// `out` if non-empty, else $EAOA_OUTPUT_ROOT/<leaf>, else ./results/<leaf>.
std::filesystem::path resolve_output_dir(const std::filesystem::path& out, const std::string& leaf);

/// One experiment; progress lines go to `log`.
harness::ExperimentResult run(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                              int jobs, std::ostream& log);

/// Same config under each strategy, written to out_dir/<strategy>/. Writes sweep.csv.
std::vector<harness::ExperimentResult> sweep(const nlohmann::json& config,
                                             const std::vector<Strategy>& strategies,
                                             const std::filesystem::path& out_dir, int jobs,
                                             std::ostream& log);

/// One experiment per value of `axis`, written to out_dir/<axis>=<value>/. Writes
/// ablation.csv with one row per value.
std::vector<harness::ExperimentResult> ablate(const nlohmann::json& config, const std::string& axis,
                                              const std::vector<std::string>& values,
                                              const std::filesystem::path& out_dir, int jobs,
                                              std::ostream& log);

struct ReportOutput {
    std::string table;        ///< final-round comparison, markdown
    std::string accuracy_csv; ///< label,round,mean,std
    std::string precision_csv;
    std::vector<std::filesystem::path> skipped;
};

/// Collect every summary.json under `results_dir` (sorted by path). Unreadable
/// summaries are skipped with a warning on `log`. Writes report_table.md,
/// report_accuracy.csv and report_precision.csv into `results_dir`.
ReportOutput report(const std::filesystem::path& results_dir, std::ostream& log);

}  // namespace eaoa::commands
