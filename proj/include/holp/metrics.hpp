#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holp/matrix.hpp"
#include "holp/modelselect.hpp"
#include "holp/parallel.hpp"
#include "holp/screening.hpp"
#include "holp/simulation.hpp"

namespace holp {

struct SelectionMetrics {
    std::size_t false_negatives = 0;
    std::size_t false_positives = 0;
    bool covered = false;  // no false negatives
    bool exact = false;    // covered and no false positives
    std::size_t size = 0;
    std::optional<double> l2_error;  // absent without a fit
    double wall_time_s = 0.0;
};

/// Compares `selected` with the true support. With a fit, l2_error is
/// ||beta_hat - beta||_2 with beta_hat scattered to length p.
SelectionMetrics score_selection(std::span<const std::size_t> selected, const FitResult* fit,
                                 const SimDataset& truth);

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n - 1); 0 for one value
    std::size_t count = 0;
};

/// Welford accumulation over the values in order.
MetricSummary summarize(std::span<const double> values);

struct ExperimentReport {
    SimScenario scenario;
    std::string method;  // pipeline label
    std::size_t d = 0;   // submodel size (0 when EBIC-sized or threshold)
    std::size_t replicates = 0;
    MetricSummary false_negatives, false_positives, coverage, exact, size, l2_error, wall_time_s;
    double inclusion_probability = 0.0;
    std::vector<std::string> warnings;
};

/// Failure of one replicate; aborts the experiment.
class ReplicateError : public Error {
public:
    ReplicateError(std::size_t replicate, const std::string& what)
        : Error("replicate " + std::to_string(replicate) + ": " + what), replicate_(replicate) {}
    std::size_t replicate() const noexcept { return replicate_; }

private:
    std::size_t replicate_;
};

/// Fraction of replicates whose true support lies inside the top-d
/// screened set. Replicate r uses simulate_dataset(scenario, r).
ExperimentReport inclusion_probability(const SimScenario& scenario, Method method,
                                       const ScreeningParams& params, std::size_t d,
                                       std::size_t replicates, std::size_t threads = 1);

/// Inclusion under either selection rule; TopD(0) means TopD(n).
ExperimentReport rule_inclusion(const SimScenario& scenario, Method method,
                                const ScreeningParams& params, const SelectionRule& rule,
                                std::size_t replicates, std::size_t threads = 1);

/// Per-replicate inclusion outcomes, in replicate order.
std::vector<bool> inclusion_outcomes(const SimScenario& scenario, Method method,
                                     const ScreeningParams& params, std::size_t d,
                                     std::size_t replicates, std::size_t threads = 1);

struct SeparationResult {
    double probability = 0.0;
    std::vector<std::string> warnings;
};

/// Fraction of replicates where min over the support of the scores strictly
/// exceeds the max over the complement. Empty support counts as 0.
SeparationResult separation_probability(const SimScenario& scenario, Method method,
                                        const ScreeningParams& params, std::size_t replicates,
                                        std::size_t threads = 1);

/// True when every support score strictly exceeds every other score.
bool separates(std::span<const double> scores, std::span<const std::size_t> support);

/// Monte Carlo run of a full pipeline with per-replicate selection metrics.
ExperimentReport pipeline_experiment(const SimScenario& scenario, const PipelineSpec& spec,
                                     std::size_t replicates, std::size_t threads = 1);

std::string pipeline_label(const PipelineSpec& spec);

/// Dimensions for the consistency-trend experiment at sample size n:
/// p = 4 floor(exp(n^{1/3})) (20 floor(exp(n^{1/4})) for Extreme);
/// s = floor(1.5 floor(n^{1/4})) when R^2 >= 0.9, else floor(n^{1/4}).
struct TrendDims {
    std::size_t p = 0;
    std::size_t s = 0;
};
TrendDims consistency_schedule(std::size_t n, Family family, double r_squared);

struct TimingPoint {
    std::size_t size = 0;  // p or d
    double median_s = 0.0;
    std::vector<double> samples_s;
};

struct TimingSetup {
    enum class Axis { P, D };
    Axis axis = Axis::P;
    std::vector<std::size_t> grid;
    SimScenario base;  // n, p (for the D axis), family, seed
    std::size_t d = 50;  // fixed submodel size for the P axis
    std::size_t repetitions = 5;  // timed runs after one warm-up
};

/// Median wall-clock of screen_top_d over each grid point.
std::vector<TimingPoint> timing_run(Method method, const ScreeningParams& params,
                                    const TimingSetup& setup);

struct CvResult {
    double mean_mse = 0.0;
    double sd_mse = 0.0;
    double median_size = 0.0;
    std::vector<double> fold_mse;
    std::vector<std::size_t> fold_size;
    std::size_t skipped_folds = 0;
    std::vector<std::string> warnings;
};

/// k-fold CV of a whole pipeline: folds from a seeded shuffle, pipeline on
/// each training split, OLS refit of the selected support, held-out MSE.
CvResult kfold_cv(const DataMatrix& x, std::span<const double> y, const PipelineSpec& spec,
                  std::size_t folds, std::uint64_t seed);

/// Same with an explicit fold label per row (values in [0, folds)).
CvResult kfold_cv(const DataMatrix& x, std::span<const double> y, const PipelineSpec& spec,
                  std::span<const std::size_t> fold_of, std::size_t folds);

enum class ProjectionKind { Holp, Sis };

/// Rows/columns `cols` of X^T (X X^T)^{-1} X (Holp) or X^T X (Sis).
DataMatrix screening_matrix_sample(const DataMatrix& x, std::span<const std::size_t> cols,
                                   ProjectionKind kind);

/// mean(diag) / mean(|off-diagonal|) of a square matrix.
double dominance_ratio(const DataMatrix& m);

}  // namespace holp
