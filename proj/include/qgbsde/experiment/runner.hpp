#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qgbsde/experiment/config.hpp"

namespace qgbsde::experiment {

enum class Command { Simulate, Solve, Converge, TruncateSweep, Diagnose, All };

/// Throws ConfigError for an unknown name.
Command parse_command(const std::string& name);
const char* to_string(Command command);

/// One report.csv row. N, n_trunc and std_error are left empty when they do
/// not apply (fitted rows, deterministic values).
struct ReportRow {
    std::string experiment_id;
    std::string model;
    std::optional<std::size_t> steps;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    unsigned n_trunc = 0;
    std::string statistic;
    double value = 0.0;
    std::optional<double> std_error;
};

enum class CheckStatus { Pass, Fail, Inconclusive };
const char* to_string(CheckStatus status);

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    std::string detail;
};

struct RunResult {
    std::vector<ReportRow> rows;
    std::vector<CheckResult> checks;
    std::vector<std::string> fitted;  ///< one human-readable line per fitted order
    bool failed() const;
};

/// Runs the command in memory. `artifact_dir`, when given, receives
/// ensemble.bin if the config asks for it. Module errors are rethrown as
/// Error with the experiment id prefixed.
RunResult run_experiment(const ExperimentConfig& config, Command command,
                         const std::optional<std::filesystem::path>& artifact_dir = std::nullopt);

/// report.csv text. The first line is a "# generated ..." comment when
/// `timestamp` is set; the body depends only on the rows.
std::string report_csv(const RunResult& result, bool timestamp);
std::string summary_text(const ExperimentConfig& config, Command command, const RunResult& result);

/// Writes report.csv, summary.txt (per `formats`) and config_resolved into `dir`.
void write_artifacts(const ExperimentConfig& config, Command command, const RunResult& result,
                     const std::filesystem::path& dir);

struct CliOptions {
    std::string config_path;
    std::string command = "all";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    bool strict = false;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitCheckFailed = 3;

/// Load, override, run, write. Messages go to stderr; returns one of the
/// exit codes above. A config error writes no artifacts.
int run_cli(const CliOptions& options);

/// 64-bit FNV-1a, used for ensemble cache keys.
std::uint64_t fnv1a(const std::string& text);

}  // namespace qgbsde::experiment
