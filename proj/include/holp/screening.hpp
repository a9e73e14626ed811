#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "holp/matrix.hpp"

namespace holp {

enum class Method { HOLP, RidgeHOLP, DivideHOLP, SIS, RRCS, ForwardRegression };

std::string_view method_name(Method m);
/// Accepts the CLI spellings: holp, ridge-holp, divide-holp, sis, rrcs, fr.
Method parse_method(std::string_view s);

struct ScreeningParams {
    double ridge = 10.0;         // r for Ridge-HOLP and the centered-HOLP fallback
    std::size_t partitions = 1;  // m for Divide-HOLP
    std::size_t target_size = 0; // d for forward regression / Divide-HOLP
    std::uint64_t seed = 0;      // Divide-HOLP row shuffle
    bool center = false;         // HOLP on centered X and Y

    friend bool operator==(const ScreeningParams&, const ScreeningParams&) = default;
};

/// Per-predictor importance. All entries finite and >= 0.
struct ScreeningScores {
    Vector scores;
    Method method = Method::HOLP;
    ScreeningParams params;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return scores.size(); }
};

struct SelectionRule {
    enum class Kind { TopD, Threshold };
    Kind kind = Kind::TopD;
    std::size_t d = 0;
    double gamma = 0.0;

    static SelectionRule top_d(std::size_t d) { return {Kind::TopD, d, 0.0}; }
    static SelectionRule threshold(double g) { return {Kind::Threshold, 0, g}; }
};

/// Selected predictors, best first. Indices are 0-based.
struct SubmodelSelection {
    std::vector<std::size_t> indices;
    SelectionRule rule;
};

/// |X^T (X X^T)^{-1} Y|. Requires p > n unless `params.center` is set, in
/// which case a rank-deficient centered Gram routes to the ridge estimator
/// with r = params.ridge.
ScreeningScores holp_scores(const DataMatrix& x, std::span<const double> y,
                            const ScreeningParams& params = {});

/// |X^T (X X^T + r I)^{-1} Y|, defined for any shape.
ScreeningScores ridge_holp_scores(const DataMatrix& x, std::span<const double> y, double r);

/// Row-partitioned HOLP: seeded shuffle, m contiguous blocks, top ceil(d/m)
/// per block, union of the block selections.
SubmodelSelection divide_holp_scores(const DataMatrix& x, std::span<const double> y,
                                     std::size_t partitions, std::size_t d,
                                     std::uint64_t seed = 0);

/// Smallest admissible Divide-HOLP block.
inline constexpr std::size_t kMinDivideBlock = 10;

struct SisOptions {
    bool standardize = true;
};

/// Marginal correlation |X^T Y| on standardized columns and centered,
/// scaled Y. Zero-variance columns score 0 and add a warning.
ScreeningScores sis_scores(const DataMatrix& x, std::span<const double> y,
                           SisOptions opts = {});

/// |omega_j - 1/4|, omega_j the fraction of ordered pairs (i, l) with
/// x_ij < x_lj and y_i < y_l (strict, so ties never count).
ScreeningScores rrcs_scores(const DataMatrix& x, std::span<const double> y);

/// Concordant-pair statistic for one column, O(n log n).
double rrcs_omega(std::span<const double> xcol, std::span<const double> y);

/// Greedy forward selection of d predictors by RSS reduction (OLS with
/// intercept). Scores encode order: first pick d, last pick 1, others 0.
ScreeningScores forward_regression_rank(const DataMatrix& x, std::span<const double> y,
                                        std::size_t d);

/// The d largest positive scores, ties to the lower index.
SubmodelSelection rank_select(const ScreeningScores& scores, std::size_t d);
SubmodelSelection rank_select(std::span<const double> scores, std::size_t d);

/// Every index with score >= gamma, best first.
SubmodelSelection threshold_select(const ScreeningScores& scores, double gamma);

/// Runs a screener and applies TopD(d). Divide-HOLP goes through its own
/// partitioned selection; forward regression is run to exactly d steps.
SubmodelSelection screen_top_d(const DataMatrix& x, std::span<const double> y, Method method,
                               const ScreeningParams& params, std::size_t d);

/// Runs a score-producing screener (everything except Divide-HOLP).
ScreeningScores compute_scores(const DataMatrix& x, std::span<const double> y, Method method,
                               const ScreeningParams& params);

}  // namespace holp
