#pragma once

// File formats for the command-line front end: experiment configs (JSON),
// tabular datasets and report rows (CSV), SVG figures.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "holp/matrix.hpp"
#include "holp/metrics.hpp"
#include "holp/modelselect.hpp"
#include "holp/simulation.hpp"

namespace holp {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentSpec {
    enum class Kind { Inclusion, Separation, Pipeline };
    std::string label;
    Kind kind = Kind::Inclusion;
    SimScenario scenario;
    PipelineSpec pipeline;  // screener + params always used; rule/refiner per kind
    // Inclusion: TopD(d) or Threshold(gamma). d = 0 means n.
    SelectionRule selection = SelectionRule::top_d(0);
    std::size_t replicates = 100;

    friend bool operator==(const ExperimentSpec& a, const ExperimentSpec& b);
};

struct CurveSpec {
    std::string file;       // relative to the output directory
    std::string x = "n";    // scenario field: n, p, rho, factors, delta2, r_squared
    std::string title;

    friend bool operator==(const CurveSpec&, const CurveSpec&) = default;
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string output_dir = "out";
    bool record_time = false;  // wall-time columns break byte-identical reruns
    std::vector<ExperimentSpec> experiments;
    std::optional<CurveSpec> curves;

    /// Throws InvalidArgument on duplicate labels or invalid scenarios.
    void validate() const;

    friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

std::string experiment_kind_name(ExperimentSpec::Kind k);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

struct ReportRow {
    std::string label;
    std::string kind;
    ExperimentReport report;
};

std::string report_csv_header(bool with_time);
std::string report_csv_row(const ReportRow& row, bool with_time);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

/// Runs every experiment of a resolved config.
ReportRow run_experiment(const ExperimentSpec& spec, std::size_t threads);

struct CampaignOutcome {
    int exit_code = 0;
    std::vector<ReportRow> rows;
    std::vector<std::string> failures;
};

/// Writes <out>/report.csv (flushed row by row) and
/// <out>/config.resolved.json, plus the optional curve figure.
CampaignOutcome run_campaign(const ExperimentConfig& cfg);

struct TabularDataset {
    std::vector<std::string> predictor_names;
    std::string response_name;
    DataMatrix x;
    Vector y;
    std::size_t rejected_rows = 0;  // rows with missing cells
};

struct CsvLoadOptions {
    std::string response;
    std::optional<std::size_t> top_variance;  // keep the k highest-variance predictors
    bool standardize = false;                 // center and scale predictors (n - 1)
};

/// Parses a comma-separated file with a header row. Empty, NA and NaN cells
/// mark a row as missing; the row is dropped and counted. Any other
/// non-numeric cell is an error naming its file line and column.
TabularDataset load_csv(const std::filesystem::path& path, const CsvLoadOptions& opts);

}  // namespace holp
