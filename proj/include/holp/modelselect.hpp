#pragma once

// Second stage: Lasso path, OLS refit, extended BIC and the composed
// screen -> submodel -> refine pipeline.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holp/matrix.hpp"
#include "holp/screening.hpp"

namespace holp {

/// A fitted linear model. `support` indexes columns of the matrix the fit
/// was computed on (original predictors for pipeline output).
struct FitResult {
    std::vector<std::size_t> support;
    Vector coefficients;  // aligned with support
    double intercept = 0.0;
    double rss = 0.0;
    double lambda = 0.0;  // 0 for OLS
};

/// log(rss / n) + (d / n) (log n + 2 log p). Throws on rss <= 0.
double ebic(double rss, std::size_t n, std::size_t p, std::size_t d);

struct LassoOptions {
    double tolerance = 1e-7;         // max coefficient change per sweep
    std::size_t max_sweeps = 100000;
    // The path ends early once the fit explains this fraction of the
    // centered sum of squares (0 disables), or once the active set reaches
    // n - 1 when stop_at_n is set. Saturated fits make EBIC meaningless.
    double max_dev_ratio = 0.999;
    bool stop_at_n = true;
};

/// Largest useful penalty, max_j |x_j^T y| / n on standardized columns.
double lasso_lambda_max(const DataMatrix& x, std::span<const double> y);

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
Vector lasso_lambda_grid(const DataMatrix& x, std::span<const double> y, std::size_t count = 100,
                         double ratio = 1e-3);

/// Cyclic coordinate descent for (1/2n)||y - b - X beta||^2 + lambda ||beta||_1
/// with columns standardized internally (1/n variance) and warm starts along
/// the path. Coefficients come back on the original scale; `support` lists
/// the nonzero columns.
std::vector<FitResult> lasso_path(const DataMatrix& x, std::span<const double> y,
                                  std::span<const double> lambdas, const LassoOptions& opts = {});

/// Least squares with intercept on the given columns. Throws
/// DimensionMismatch when |support| >= n and InvalidArgument naming the first
/// linearly dependent column.
FitResult ols_refit(const DataMatrix& x, std::span<const double> y,
                    std::span<const std::size_t> support);

struct EbicSizing {
    SubmodelSelection selection;
    std::vector<double> ebic_by_size;  // index k-1; NaN for skipped sizes
    std::vector<std::string> warnings;
};

/// Refits the top-k ranked predictors for k = 1..dmax and keeps the k with
/// the smallest EBIC (ties to the smaller k).
EbicSizing ebic_size(const ScreeningScores& scores, const DataMatrix& x, std::span<const double> y,
                     std::size_t dmax);

enum class Refiner { LassoEBIC, OLS, None };

std::string_view refiner_name(Refiner r);
Refiner parse_refiner(std::string_view s);

struct SubmodelRule {
    enum class Kind { TopD, EBICSized };
    Kind kind = Kind::TopD;
    // d for TopD, dmax for EBICSized; unset means n (capped at n - 2 for
    // EBIC sizing). TopD(0) is the intercept-only model.
    std::optional<std::size_t> size;

    friend bool operator==(const SubmodelRule&, const SubmodelRule&) = default;
};

struct PipelineSpec {
    Method screener = Method::HOLP;
    ScreeningParams params;
    SubmodelRule rule;
    Refiner refiner = Refiner::LassoEBIC;

    friend bool operator==(const PipelineSpec&, const PipelineSpec&) = default;
};

/// Error from one pipeline stage; the message carries the stage name.
class PipelineStageError : public Error {
public:
    PipelineStageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PipelineResult {
    SubmodelSelection screened;
    FitResult fit;  // support in original predictor indices
};

PipelineResult run_pipeline(const DataMatrix& x, std::span<const double> y,
                            const PipelineSpec& spec);

/// Predictions b + X_S beta for a fit expressed in original indices.
Vector predict(const FitResult& fit, const DataMatrix& x);

}  // namespace holp
