#pragma once

#include "aperture/operators.hpp"
#include "aperture/solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aperture {

inline constexpr const char* kVersion = "0.4.0";
inline constexpr const char* kCsvSchema = "aperture-results/1";

/// One `analysis.<id>.kind = ...` block with its remaining keys.
struct AnalysisConfig {
    std::string id;
    std::string kind;
    std::map<std::string, std::string> params;
};

/// Flat `section.key = value` experiment description. Keys are documented in
/// README.md; unknown keys are rejected.
struct ExperimentConfig {
    /// Every key/value pair in file order, for the manifest echo.
    std::vector<std::pair<std::string, std::string>> entries;

    int dim = 1;
    std::string op = "pucci_plus";
    double lambda = 1.0;
    double Lambda = 1.0;
    /// When set, Lambda = lambda (1 + aperture).
    std::optional<double> aperture;
    double p = 2.0;
    std::string source = "0";
    std::string source_table;
    std::string boundary = "0";
    std::string boundary_table;
    Box domain;
    /// smooth | holder | bounded | lp
    std::string source_class = "smooth";
    double source_alpha = 1.0;
    double source_p = 0.0;
    bool normalize = false;
    std::optional<ParabolicCylinder> ball;
    /// coeff.aij expressions for the linear operator, keyed "ij" with i <= j.
    std::map<std::string, std::string> coeff;
    std::string coeff_offset;
    /// isaacs.<b>.<g>.aij and isaacs.<b>.<g>.f
    std::map<int, std::map<int, std::map<std::string, std::string>>> isaacs;

    SchemeConfig scheme;
    std::vector<AnalysisConfig> analyses;

    std::string sweep_parameter;
    std::vector<double> sweep_values;

    std::string out_dir = "results";
    std::uint64_t seed = 1;
    int workers = 1;
};

/// Parses the text format; throws ValidationError ("config") on syntax
/// errors, unknown keys and malformed values.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical text form (file order), parseable by parse_config.
std::string config_text(const ExperimentConfig& cfg);

/// Checks ellipticity by sampling and the source class against the requested
/// analyses. Throws ValidationError with codes "ellipticity", "source_class".
void validate_config(const ExperimentConfig& cfg);

/// Problem for one sweep value (NaN means "no sweep").
ProblemSpec build_problem(const ExperimentConfig& cfg, double sweep_value, double* shift = nullptr);
SchemeConfig build_scheme(const ExperimentConfig& cfg, double sweep_value);

struct ResultRow {
    std::string sweep_parameter;
    double sweep_value = 0.0;
    std::string analysis;
    std::string estimator;
    double exponent = 0.0;
    double constant = 0.0;
    double r2 = 0.0;
    /// Short key=value;... annotations without commas.
    std::string detail;
    std::vector<double> scales;
    std::vector<double> values;
    /// Not written to the CSV.
    double runtime = 0.0;
};

/// CSV header line for the current schema.
std::string csv_header();
std::string csv_row(const ResultRow& row);
/// Full CSV text, header first.
std::string csv_text(const std::vector<ResultRow>& rows);

struct SweepPointResult {
    double sweep_value = 0.0;
    std::vector<ResultRow> rows;
    double normalization_shift = 0.0;
    double solve_seconds = 0.0;
    long steps = 0;
    double dt = 0.0;
};

/// Runs every sweep point (in parallel up to `workers`) and returns the rows
/// merged in sweep order. Errors propagate with their original types.
std::vector<SweepPointResult> run_sweep(const ExperimentConfig& cfg, int workers);

struct RunOutcome {
    int exit_code = 0;
    std::string error_code;
    std::string message;
};

/// The `run` command: loads, validates, runs, writes results.csv and
/// manifest.json (or errors.json) into `out_dir`. A path ending in .json is
/// read as a manifest and its config echo is re-run.
RunOutcome run_experiment(const std::string& config_path, const std::optional<std::string>& out_dir,
                          const std::optional<int>& workers);

/// Exit code for an exception escaping the run: 2 validation, 3 CFL,
/// 4 estimator precondition, 5 anything else.
int exit_code_for(const std::exception& e);

}  // namespace aperture
