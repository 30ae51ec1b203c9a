#pragma once

// Experiment driver: JSON configs in, run directories out.
//
// A run directory holds manifest.json (the resolved config), report.json,
// CSV curves, serialized fields, and timing.json. Everything except
// timing.json is a pure function of the config.

#include "kahler/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kahler {

enum class ExperimentKind {
    solve_calabi,
    solve_perturbed,
    model_metric,
    barrier,
    decay,
    curvature_profile,
    growth_profile
};

std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

/// Output root override.
inline constexpr const char* kOutputRootVar = "KAHLER_OUTPUT_ROOT";

struct ExperimentConfig {
    std::string name;
    std::string description;
    ExperimentKind kind = ExperimentKind::solve_calabi;
    nlohmann::json chart;    // torus {n, resolution, period} or model {ModelSpec fields}
    nlohmann::json payload;  // kind-specific, defaults filled in
    std::string output_dir;
    std::uint64_t seed = 0;

    /// Parses and validates; unknown keys and missing required keys are
    /// ConfigError. The result carries every default explicitly.
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// ModelSpec described by a model chart block.
    ModelSpec model_spec() const;
};

/// Reads a config file, or the config block of a manifest. A config without
/// a name takes the file stem.
ExperimentConfig load_config(const std::string& path);

/// output_dir, or $KAHLER_OUTPUT_ROOT/name when the variable is set.
std::string resolve_output_dir(const ExperimentConfig& c);

struct RunResult {
    int exit_status = 0;  // 0 pass, 1 criteria failed, 2 config or module error
    bool pass = false;
    std::string directory;
    nlohmann::json report;
    std::string error;
};

/// Runs one experiment into a scratch directory and moves it into place
/// only when it completes, so errors leave no artifacts behind.
RunResult run(const ExperimentConfig& config, std::ostream& out);

struct ReportRow {
    std::string directory;
    std::string name;
    std::string experiment;
    std::string params;  // key parameters, "k=v" joined by spaces
    std::string metric;  // headline metric name
    double value = 0.0;
    std::string status;  // pass, fail, or missing-manifest
};

/// One row per directory, sorted by (name, directory). Directories without
/// a manifest or report give a missing-manifest row.
std::vector<ReportRow> report_table(const std::vector<std::string>& dirs);
std::string report_csv(const std::vector<ReportRow>& rows);
nlohmann::json report_json(const std::vector<ReportRow>& rows);
void print_table(const std::vector<ReportRow>& rows, std::ostream& out);

struct SuiteResult {
    int exit_status = 0;
    std::vector<RunResult> runs;
    std::vector<ReportRow> rows;
};

/// Runs every *.json in config_dir (sorted by file name) under output_root,
/// then writes report.csv and report.json there.
SuiteResult run_suite(const std::string& config_dir, const std::string& output_root, std::ostream& out);

/// JSON dump used for every report: sorted keys, shortest round-trip
/// floats, non-finite values as strings.
std::string dump_report(const nlohmann::json& j);

}  // namespace kahler
