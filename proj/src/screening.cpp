#include "holp/screening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "holp/linalg.hpp"

namespace holp {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::HOLP: return "holp";
        case Method::RidgeHOLP: return "ridge-holp";
        case Method::DivideHOLP: return "divide-holp";
        case Method::SIS: return "sis";
        case Method::RRCS: return "rrcs";
        case Method::ForwardRegression: return "fr";
    }
    return "unknown";
}

Method parse_method(std::string_view s) {
    for (Method m : {Method::HOLP, Method::RidgeHOLP, Method::DivideHOLP, Method::SIS,
                     Method::RRCS, Method::ForwardRegression})
        if (method_name(m) == s) return m;
    throw InvalidArgument("unknown screening method '" + std::string(s) +
                          "' (expected holp, ridge-holp, divide-holp, sis, rrcs or fr)");
}

namespace {

void check_response(const DataMatrix& x, std::span<const double> y, const char* who) {
    if (y.size() != x.rows()) {
        throw DimensionMismatch(std::string(who) + ": X is " + x.shape_str() +
                                " but Y has length " + std::to_string(y.size()));
    }
}

Vector abs_values(Vector v) {
    for (double& e : v) e = std::abs(e);
    return v;
}

// X^T (G + r I)^{-1} y for G = X X^T.
Vector projected_coefficients(const DataMatrix& x, std::span<const double> y, double ridge) {
    DataMatrix g = gram_rows(x);
    if (ridge != 0.0)
        for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += ridge;
    const SpdFactor f = spd_factor(g);
    const Vector w = spd_solve(f, y);
    return mat_tvec(x, w);
}

void center_columns(DataMatrix& x) {
    const std::size_t n = x.rows(), p = x.cols();
    Vector mean(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        for (std::size_t j = 0; j < p; ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        for (std::size_t j = 0; j < p; ++j) r[j] -= mean[j];
    }
}

bool better(std::span<const double> s, std::size_t a, std::size_t b) {
    return s[a] > s[b] || (s[a] == s[b] && a < b);
}

}  // namespace

ScreeningScores holp_scores(const DataMatrix& x, std::span<const double> y,
                            const ScreeningParams& params) {
    check_response(x, y, "holp_scores");
    ScreeningScores out;
    out.method = Method::HOLP;
    out.params = params;

    if (!params.center) {
        if (x.cols() <= x.rows()) {
            throw DegenerateRegime("holp_scores: HOLP needs p > n but X is " + x.shape_str() +
                                   "; X X^T is singular. Use ridge_holp_scores instead");
        }
        try {
            out.scores = abs_values(projected_coefficients(x, y, 0.0));
        } catch (const NotPositiveDefinite& e) {
            throw NotPositiveDefinite(e.pivot(), std::string("holp_scores: ") + e.what());
        }
        return out;
    }

    DataMatrix xc = x;
    center_columns(xc);
    Vector yc(y.begin(), y.end());
    const double ybar = std::accumulate(yc.begin(), yc.end(), 0.0) / static_cast<double>(yc.size());
    for (double& v : yc) v -= ybar;
    try {
        if (xc.cols() <= xc.rows()) throw NotPositiveDefinite(xc.cols(), "p <= n");
        out.scores = abs_values(projected_coefficients(xc, yc, 0.0));
    } catch (const NotPositiveDefinite&) {
        if (!(params.ridge > 0.0)) {
            throw InvalidArgument("holp_scores: centered Gram is rank-deficient and the ridge "
                                  "fallback parameter is not positive");
        }
        out.scores = abs_values(projected_coefficients(xc, yc, params.ridge));
        out.method = Method::RidgeHOLP;
        out.warnings.push_back("centered X X^T is rank-deficient; used ridge HOLP with r = " +
                               std::to_string(params.ridge));
    }
    return out;
}

ScreeningScores ridge_holp_scores(const DataMatrix& x, std::span<const double> y, double r) {
    check_response(x, y, "ridge_holp_scores");
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw InvalidArgument("ridge_holp_scores: ridge parameter must be positive, got " +
                              std::to_string(r));
    }
    ScreeningScores out;
    out.method = Method::RidgeHOLP;
    out.params.ridge = r;
    out.scores = abs_values(projected_coefficients(x, y, r));
    return out;
}

SubmodelSelection divide_holp_scores(const DataMatrix& x, std::span<const double> y,
                                     std::size_t partitions, std::size_t d, std::uint64_t seed) {
    check_response(x, y, "divide_holp_scores");
    const std::size_t n = x.rows();
    if (partitions == 0) throw InvalidArgument("divide_holp_scores: partition count must be >= 1");
    if (n / partitions < kMinDivideBlock) {
        throw InvalidArgument("divide_holp_scores: " + std::to_string(partitions) +
                              " partitions of " + std::to_string(n) +
                              " rows leave blocks smaller than the minimum of " +
                              std::to_string(kMinDivideBlock));
    }
    if (d == 0 || d > x.cols()) {
        throw InvalidArgument("divide_holp_scores: d must lie in [1, p], got " + std::to_string(d));
    }

    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    if (partitions > 1) {
        std::mt19937_64 rng(seed);
        std::shuffle(rows.begin(), rows.end(), rng);
    }
    const std::size_t quota = (d + partitions - 1) / partitions;

    struct Pick {
        std::size_t rank, block, index;
    };
    std::vector<Pick> picks;
    for (std::size_t b = 0; b < partitions; ++b) {
        const std::size_t lo = b * n / partitions;
        const std::size_t hi = (b + 1) * n / partitions;
        std::span<const std::size_t> block_rows(rows.data() + lo, hi - lo);
        const DataMatrix xb = x.select_rows(block_rows);
        Vector yb(block_rows.size());
        for (std::size_t i = 0; i < block_rows.size(); ++i) yb[i] = y[block_rows[i]];
        ScreeningScores s;
        try {
            s = holp_scores(xb, yb);
        } catch (const NotPositiveDefinite& e) {
            throw NotPositiveDefinite(e.pivot(), "divide_holp_scores: block " + std::to_string(b) +
                                                     ": " + e.what());
        } catch (const DegenerateRegime& e) {
            throw DegenerateRegime("divide_holp_scores: block " + std::to_string(b) + ": " +
                                   e.what());
        }
        const auto sel = rank_select(s, std::min(quota, x.cols()));
        for (std::size_t r = 0; r < sel.indices.size(); ++r) picks.push_back({r, b, sel.indices[r]});
    }
    // Best within-block rank first, then block order; duplicates keep their
    // first (best) occurrence.
    std::stable_sort(picks.begin(), picks.end(), [](const Pick& a, const Pick& b) {
        return a.rank != b.rank ? a.rank < b.rank : a.block < b.block;
    });
    SubmodelSelection out;
    out.rule = SelectionRule::top_d(d);
    std::vector<bool> seen(x.cols(), false);
    for (const auto& pk : picks) {
        if (seen[pk.index]) continue;
        seen[pk.index] = true;
        out.indices.push_back(pk.index);
    }
    return out;
}

ScreeningScores sis_scores(const DataMatrix& x, std::span<const double> y, SisOptions opts) {
    check_response(x, y, "sis_scores");
    ScreeningScores out;
    out.method = Method::SIS;
    const std::size_t n = x.rows(), p = x.cols();
    if (!opts.standardize) {
        out.scores = abs_values(mat_tvec(x, y));
        return out;
    }

    Vector yc(y.begin(), y.end());
    const double ybar = std::accumulate(yc.begin(), yc.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double& v : yc) {
        v -= ybar;
        ss += v * v;
    }
    const double ysd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    if (ysd > 0.0)
        for (double& v : yc) v /= ysd;

    // Column means and variances in one row pass (Welford per column).
    Vector mean(p, 0.0), m2(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        const double k = static_cast<double>(i + 1);
        for (std::size_t j = 0; j < p; ++j) {
            const double delta = r[j] - mean[j];
            mean[j] += delta / k;
            m2[j] += delta * (r[j] - mean[j]);
        }
    }
    // Since yc sums to zero, (x_j - mean_j)^T yc = x_j^T yc.
    Vector xty = mat_tvec(x, yc);
    out.scores.assign(p, 0.0);
    std::size_t flat = 0;
    for (std::size_t j = 0; j < p; ++j) {
        const double sd = n > 1 ? std::sqrt(m2[j] / static_cast<double>(n - 1)) : 0.0;
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean[j])))) {
            ++flat;
            continue;
        }
        out.scores[j] = std::abs(xty[j]) / sd;
    }
    if (flat > 0) {
        out.warnings.push_back(std::to_string(flat) +
                               " zero-variance column(s) scored 0 by sis_scores");
    }
    return out;
}

namespace {

// Counts pairs (a < b) with key[a] < key[b] while merge-sorting key.
std::uint64_t count_ascending_pairs(std::vector<double>& key, std::vector<double>& tmp,
                                    std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t count = count_ascending_pairs(key, tmp, lo, mid) +
                          count_ascending_pairs(key, tmp, mid, hi);
    // For each right element, the number of left elements strictly smaller.
    std::size_t i = lo;
    for (std::size_t j = mid; j < hi; ++j) {
        while (i < mid && key[i] < key[j]) ++i;
        count += i - lo;
    }
    std::merge(key.begin() + static_cast<std::ptrdiff_t>(lo),
               key.begin() + static_cast<std::ptrdiff_t>(mid),
               key.begin() + static_cast<std::ptrdiff_t>(mid),
               key.begin() + static_cast<std::ptrdiff_t>(hi),
               tmp.begin() + static_cast<std::ptrdiff_t>(lo));
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
              tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              key.begin() + static_cast<std::ptrdiff_t>(lo));
    return count;
}

}  // namespace

double rrcs_omega(std::span<const double> xcol, std::span<const double> y) {
    const std::size_t n = y.size();
    if (xcol.size() != n) throw DimensionMismatch("rrcs_omega: column and response lengths differ");
    if (n < 2) throw InvalidArgument("rrcs_omega: needs n >= 2");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // y ascending; equal y sorted by x descending so they never count.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (y[a] != y[b]) return y[a] < y[b];
        if (xcol[a] != xcol[b]) return xcol[a] > xcol[b];
        return a < b;
    });
    std::vector<double> key(n), tmp(n);
    for (std::size_t k = 0; k < n; ++k) key[k] = xcol[order[k]];
    const std::uint64_t c = count_ascending_pairs(key, tmp, 0, n);
    return static_cast<double>(c) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

ScreeningScores rrcs_scores(const DataMatrix& x, std::span<const double> y) {
    check_response(x, y, "rrcs_scores");
    if (x.rows() < 2) throw InvalidArgument("rrcs_scores: needs n >= 2");
    ScreeningScores out;
    out.method = Method::RRCS;
    out.scores.resize(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const Vector col = x.col(j);
        out.scores[j] = std::abs(rrcs_omega(col, y) - 0.25);
    }
    return out;
}

ScreeningScores forward_regression_rank(const DataMatrix& x, std::span<const double> y,
                                        std::size_t d) {
    check_response(x, y, "forward_regression_rank");
    const std::size_t n = x.rows(), p = x.cols();
    if (n == 0 || d > std::min(n - 1, p)) {
        throw InvalidArgument("forward_regression_rank: d = " + std::to_string(d) +
                              " exceeds min(n - 1, p) for X " + x.shape_str());
    }
    ScreeningScores out;
    out.method = Method::ForwardRegression;
    out.params.target_size = d;
    out.scores.assign(p, 0.0);
    if (d == 0) return out;

    // Intercept handled by centering; the residual stays orthogonal to 1 and
    // to every chosen direction, so x_j^T r equals the centered inner product.
    Vector r(y.begin(), y.end());
    const double ybar = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
    for (double& v : r) v -= ybar;

    Vector mean(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = x.row(i);
        for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    Vector resid_norm(p, 0.0);  // ||x_j - P x_j||^2 with P onto span{1, chosen}
    for (std::size_t i = 0; i < n; ++i) {
        auto row = x.row(i);
        for (std::size_t j = 0; j < p; ++j) {
            const double c = row[j] - mean[j];
            resid_norm[j] += c * c;
        }
    }
    const Vector initial_norm = resid_norm;
    Vector corr = mat_tvec(x, r);  // x_j^T r

    std::vector<Vector> basis;  // orthonormal, centered directions
    std::vector<bool> chosen(p, false);
    for (std::size_t step = 0; step < d; ++step) {
        std::size_t best = p;
        double best_gain = -1.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (chosen[j]) continue;
            if (!(resid_norm[j] > 1e-12 * initial_norm[j]) || initial_norm[j] == 0.0) continue;
            const double gain = corr[j] * corr[j] / resid_norm[j];
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        if (best == p) {
            out.warnings.push_back("forward regression stopped after " + std::to_string(step) +
                                   " steps: remaining candidates are collinear");
            break;
        }
        chosen[best] = true;
        out.scores[best] = static_cast<double>(d - step);

        // New direction: centered x_best orthogonalized against the basis (twice).
        Vector q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = x(i, best) - mean[best];
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                const double c = dot(b, q);
                for (std::size_t i = 0; i < n; ++i) q[i] -= c * b[i];
            }
        const double qn = norm2(q);
        for (double& v : q) v /= qn;

        const double qr = dot(q, r);
        for (std::size_t i = 0; i < n; ++i) r[i] -= qr * q[i];
        const Vector u = mat_tvec(x, q);  // x_j^T q; q is centered
        for (std::size_t j = 0; j < p; ++j) {
            corr[j] -= qr * u[j];
            resid_norm[j] -= u[j] * u[j];
        }
        basis.push_back(std::move(q));
    }
    return out;
}

SubmodelSelection rank_select(std::span<const double> scores, std::size_t d) {
    SubmodelSelection out;
    out.rule = SelectionRule::top_d(d);
    std::vector<std::size_t> idx;
    idx.reserve(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (scores[j] > 0.0) idx.push_back(j);
    const std::size_t k = std::min(d, idx.size());
    auto cmp = [&](std::size_t a, std::size_t b) { return better(scores, a, b); };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), cmp);
    idx.resize(k);
    out.indices = std::move(idx);
    return out;
}

SubmodelSelection rank_select(const ScreeningScores& scores, std::size_t d) {
    return rank_select(std::span<const double>(scores.scores), d);
}

SubmodelSelection threshold_select(const ScreeningScores& scores, double gamma) {
    if (!(gamma >= 0.0)) {
        throw InvalidArgument("threshold_select: gamma must be non-negative");
    }
    SubmodelSelection out;
    out.rule = SelectionRule::threshold(gamma);
    const auto& s = scores.scores;
    for (std::size_t j = 0; j < s.size(); ++j)
        if (s[j] >= gamma) out.indices.push_back(j);
    std::stable_sort(out.indices.begin(), out.indices.end(),
                     [&](std::size_t a, std::size_t b) { return better(s, a, b); });
    return out;
}

ScreeningScores compute_scores(const DataMatrix& x, std::span<const double> y, Method method,
                               const ScreeningParams& params) {
    switch (method) {
        case Method::HOLP: return holp_scores(x, y, params);
        case Method::RidgeHOLP: return ridge_holp_scores(x, y, params.ridge);
        case Method::SIS: return sis_scores(x, y);
        case Method::RRCS: return rrcs_scores(x, y);
        case Method::ForwardRegression: {
            auto s = forward_regression_rank(x, y, params.target_size);
            s.params = params;
            return s;
        }
        case Method::DivideHOLP: {
            // Selection order encoded as scores, like forward regression.
            const auto sel = divide_holp_scores(x, y, params.partitions, params.target_size,
                                                params.seed);
            ScreeningScores s;
            s.method = Method::DivideHOLP;
            s.params = params;
            s.scores.assign(x.cols(), 0.0);
            for (std::size_t r = 0; r < sel.indices.size(); ++r)
                s.scores[sel.indices[r]] = static_cast<double>(sel.indices.size() - r);
            return s;
        }
    }
    throw InvalidArgument("compute_scores: unknown method");
}

SubmodelSelection screen_top_d(const DataMatrix& x, std::span<const double> y, Method method,
                               const ScreeningParams& params, std::size_t d) {
    if (method == Method::DivideHOLP) {
        return divide_holp_scores(x, y, params.partitions, d, params.seed);
    }
    ScreeningParams local = params;
    if (method == Method::ForwardRegression) {
        // Forward regression saturates at n - 1 predictors.
        local.target_size = std::min({d, x.rows() > 0 ? x.rows() - 1 : 0, x.cols()});
    }
    return rank_select(compute_scores(x, y, method, local), d);
}

}  // namespace holp
