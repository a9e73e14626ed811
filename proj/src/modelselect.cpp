#include "holp/modelselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "holp/linalg.hpp"

namespace holp {

double ebic(double rss, std::size_t n, std::size_t p, std::size_t d) {
    if (!(rss > 0.0)) {
        throw InvalidArgument("ebic: RSS must be positive (got " + std::to_string(rss) +
                              "); a zero RSS means the fit interpolates the data");
    }
    if (n == 0 || p == 0) throw InvalidArgument("ebic: n and p must be >= 1");
    const double nn = static_cast<double>(n);
    return std::log(rss / nn) +
           static_cast<double>(d) / nn * (std::log(nn) + 2.0 * std::log(static_cast<double>(p)));
}

namespace {

struct Standardized {
    std::vector<Vector> cols;  // centered, unit (1/n) variance; zero for flat columns
    Vector mean, scale;        // scale 0 marks a flat column
    Vector yc;
    double ybar = 0.0;
};

Standardized standardize(const DataMatrix& x, std::span<const double> y) {
    const std::size_t n = x.rows(), q = x.cols();
    Standardized s;
    s.mean.assign(q, 0.0);
    s.scale.assign(q, 0.0);
    s.cols.assign(q, Vector(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) s.cols[j][i] = x(i, j);
    for (std::size_t j = 0; j < q; ++j) {
        auto& c = s.cols[j];
        const double m = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double& v : c) {
            v -= m;
            ss += v * v;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        s.mean[j] = m;
        if (sd > 1e-12 * std::max(1.0, std::abs(m))) {
            s.scale[j] = sd;
            for (double& v : c) v /= sd;
        } else {
            std::fill(c.begin(), c.end(), 0.0);
        }
    }
    s.yc.assign(y.begin(), y.end());
    s.ybar = std::accumulate(s.yc.begin(), s.yc.end(), 0.0) / static_cast<double>(n);
    for (double& v : s.yc) v -= s.ybar;
    return s;
}

inline double soft_threshold(double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

void check_response(const DataMatrix& x, std::span<const double> y, const char* who) {
    if (y.size() != x.rows()) {
        throw DimensionMismatch(std::string(who) + ": X is " + x.shape_str() +
                                " but Y has length " + std::to_string(y.size()));
    }
}

}  // namespace

double lasso_lambda_max(const DataMatrix& x, std::span<const double> y) {
    check_response(x, y, "lasso_lambda_max");
    const Standardized s = standardize(x, y);
    double lmax = 0.0;
    for (const auto& c : s.cols) lmax = std::max(lmax, std::abs(dot(c, s.yc)));
    return lmax / static_cast<double>(x.rows());
}

Vector lasso_lambda_grid(const DataMatrix& x, std::span<const double> y, std::size_t count,
                         double ratio) {
    if (count == 0) return {};
    const double lmax = lasso_lambda_max(x, y);
    Vector grid(count);
    if (count == 1 || lmax <= 0.0) {
        std::fill(grid.begin(), grid.end(), lmax);
        if (lmax <= 0.0) grid.resize(1);
        return grid;
    }
    const double step = std::log(ratio) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) grid[k] = lmax * std::exp(step * static_cast<double>(k));
    return grid;
}

std::vector<FitResult> lasso_path(const DataMatrix& x, std::span<const double> y,
                                  std::span<const double> lambdas, const LassoOptions& opts) {
    check_response(x, y, "lasso_path");
    const std::size_t n = x.rows(), q = x.cols();
    if (n < 2) throw InvalidArgument("lasso_path: needs at least two observations");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(lambdas[k] >= 0.0) || (k > 0 && !(lambdas[k] < lambdas[k - 1]))) {
            throw InvalidArgument("lasso_path: lambdas must be non-negative and strictly "
                                  "descending (index " + std::to_string(k) + ")");
        }
    }
    const Standardized s = standardize(x, y);
    const double inv_n = 1.0 / static_cast<double>(n);
    Vector beta(q, 0.0);
    Vector r = s.yc;

    // One coordinate pass over `which`; returns the largest coefficient move.
    auto sweep = [&](const std::vector<std::size_t>& which, double lambda) {
        double max_change = 0.0;
        for (std::size_t j : which) {
            if (s.scale[j] == 0.0) continue;
            const auto& z = s.cols[j];
            const double old = beta[j];
            const double g = dot(z, r) * inv_n + old;
            const double upd = soft_threshold(g, lambda);
            const double delta = upd - old;
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) r[i] -= delta * z[i];
                beta[j] = upd;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        return max_change;
    };

    std::vector<std::size_t> all(q);
    std::iota(all.begin(), all.end(), 0);
    std::vector<FitResult> path;
    path.reserve(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double lambda = lambdas[k];
        std::size_t sweeps = 0;
        for (;;) {
            const double full = sweep(all, lambda);
            ++sweeps;
            if (full < opts.tolerance) break;
            std::vector<std::size_t> active;
            for (std::size_t j = 0; j < q; ++j)
                if (beta[j] != 0.0) active.push_back(j);
            bool converged = false;
            while (sweeps < opts.max_sweeps) {
                const double change = sweep(active, lambda);
                ++sweeps;
                if (change < opts.tolerance) {
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                throw ConvergenceFailure(sweeps, "lasso_path: no convergence after " +
                                                     std::to_string(sweeps) +
                                                     " sweeps at lambda index " + std::to_string(k));
            }
        }

        FitResult fit;
        fit.lambda = lambda;
        fit.intercept = s.ybar;
        for (std::size_t j = 0; j < q; ++j) {
            if (beta[j] == 0.0) continue;
            const double b = beta[j] / s.scale[j];
            fit.support.push_back(j);
            fit.coefficients.push_back(b);
            fit.intercept -= s.mean[j] * b;
        }
        fit.rss = dot(r, r);
        path.push_back(std::move(fit));

        const double tss = dot(s.yc, s.yc);
        const bool saturated_dev = opts.max_dev_ratio > 0.0 && tss > 0.0 &&
                                   1.0 - path.back().rss / tss >= opts.max_dev_ratio;
        const bool saturated_df = opts.stop_at_n && path.back().support.size() + 1 >= n;
        if (saturated_dev || saturated_df) break;
    }
    return path;
}

FitResult ols_refit(const DataMatrix& x, std::span<const double> y,
                    std::span<const std::size_t> support) {
    check_response(x, y, "ols_refit");
    const std::size_t n = x.rows(), k = support.size();
    if (k >= n) {
        throw DimensionMismatch("ols_refit: support of size " + std::to_string(k) +
                                " needs more than " + std::to_string(n) + " observations");
    }
    for (std::size_t j : support)
        if (j >= x.cols()) throw DimensionMismatch("ols_refit: column " + std::to_string(j) + " out of range");

    Vector yc(y.begin(), y.end());
    const double ybar = std::accumulate(yc.begin(), yc.end(), 0.0) / static_cast<double>(n);
    for (double& v : yc) v -= ybar;

    // Modified Gram-Schmidt on centered columns: Xc = Q R.
    Vector mean(k, 0.0);
    std::vector<Vector> qcols;
    DataMatrix rmat(k, k);
    for (std::size_t c = 0; c < k; ++c) {
        Vector v = x.col(support[c]);
        mean[c] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
        for (double& e : v) e -= mean[c];
        const double orig = norm2(v);
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t b = 0; b < c; ++b) {
                const double proj = dot(qcols[b], v);
                rmat(b, c) += proj;
                for (std::size_t i = 0; i < n; ++i) v[i] -= proj * qcols[b][i];
            }
        const double nrm = norm2(v);
        if (!(nrm > 1e-10 * orig) || orig == 0.0) {
            throw InvalidArgument("ols_refit: column " + std::to_string(support[c]) +
                                  " is linearly dependent on the intercept and earlier columns");
        }
        rmat(c, c) = nrm;
        for (double& e : v) e /= nrm;
        qcols.push_back(std::move(v));
    }
    // R beta = Q^T yc
    Vector coef(k);
    for (std::size_t c = 0; c < k; ++c) coef[c] = dot(qcols[c], yc);
    for (std::size_t c = k; c-- > 0;) {
        double sacc = coef[c];
        for (std::size_t b = c + 1; b < k; ++b) sacc -= rmat(c, b) * coef[b];
        coef[c] = sacc / rmat(c, c);
    }

    FitResult fit;
    fit.support.assign(support.begin(), support.end());
    fit.coefficients = coef;
    fit.intercept = ybar;
    for (std::size_t c = 0; c < k; ++c) fit.intercept -= mean[c] * coef[c];
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = fit.intercept;
        for (std::size_t c = 0; c < k; ++c) pred += x(i, support[c]) * coef[c];
        const double e = y[i] - pred;
        rss += e * e;
    }
    fit.rss = rss;
    return fit;
}

EbicSizing ebic_size(const ScreeningScores& scores, const DataMatrix& x, std::span<const double> y,
                     std::size_t dmax) {
    check_response(x, y, "ebic_size");
    const std::size_t n = x.rows(), p = x.cols();
    if (n < 3 || dmax == 0 || dmax > n - 2) {
        throw InvalidArgument("ebic_size: dmax must lie in [1, n - 2], got " + std::to_string(dmax));
    }
    const auto ranked = rank_select(scores, dmax);
    EbicSizing out;
    out.ebic_by_size.assign(dmax, std::numeric_limits<double>::quiet_NaN());

    Vector r(y.begin(), y.end());
    const double ybar = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
    for (double& v : r) v -= ybar;
    // RSS below this is rounding noise, not fit.
    const double rss_floor = std::max(1e-24 * dot(r, r), std::numeric_limits<double>::min());

    std::vector<Vector> basis;
    std::vector<std::size_t> kept;
    std::size_t best_k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= dmax; ++k) {
        if (k > ranked.indices.size()) {
            out.warnings.push_back("fewer than " + std::to_string(k) + " positive scores; sizing stopped");
            break;
        }
        const std::size_t j = ranked.indices[k - 1];
        Vector v = x.col(j);
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
        for (double& e : v) e -= m;
        const double orig = norm2(v);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                const double proj = dot(b, v);
                for (std::size_t i = 0; i < n; ++i) v[i] -= proj * b[i];
            }
        const double nrm = norm2(v);
        if (orig == 0.0 || !(nrm > 1e-10 * orig)) {
            out.warnings.push_back("size " + std::to_string(k) + " skipped: column " +
                                   std::to_string(j) + " is linearly dependent on the prefix");
            continue;
        }
        for (double& e : v) e /= nrm;
        const double proj = dot(v, r);
        for (std::size_t i = 0; i < n; ++i) r[i] -= proj * v[i];
        basis.push_back(std::move(v));
        kept.push_back(j);

        const double rss = std::max(dot(r, r), rss_floor);
        const double value = ebic(rss, n, p, kept.size());
        out.ebic_by_size[k - 1] = value;
        if (value < best) {
            best = value;
            best_k = kept.size();
        }
    }
    out.selection.rule = SelectionRule::top_d(best_k);
    out.selection.indices.assign(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(best_k));
    return out;
}

std::string_view refiner_name(Refiner r) {
    switch (r) {
        case Refiner::LassoEBIC: return "lasso-ebic";
        case Refiner::OLS: return "ols";
        case Refiner::None: return "none";
    }
    return "unknown";
}

Refiner parse_refiner(std::string_view s) {
    for (Refiner r : {Refiner::LassoEBIC, Refiner::OLS, Refiner::None})
        if (refiner_name(r) == s) return r;
    throw InvalidArgument("unknown refiner '" + std::string(s) + "' (expected lasso-ebic, ols or none)");
}

PipelineResult run_pipeline(const DataMatrix& x, std::span<const double> y,
                            const PipelineSpec& spec) {
    const std::size_t n = x.rows(), p = x.cols();
    PipelineResult out;

    try {
        const std::size_t size = spec.rule.size.value_or(n);
        if (spec.rule.kind == SubmodelRule::Kind::TopD && size == 0) {
            out.screened.rule = SelectionRule::top_d(0);
        } else if (spec.rule.kind == SubmodelRule::Kind::TopD) {
            out.screened = screen_top_d(x, y, spec.screener, spec.params, std::min(size, p));
        } else {
            const auto scores = compute_scores(x, y, spec.screener, spec.params);
            out.screened = ebic_size(scores, x, y, std::min(size, n - 2)).selection;
        }
    } catch (const Error& e) {
        throw PipelineStageError("screen", e.what());
    }

    const auto& sel = out.screened.indices;
    try {
        switch (spec.refiner) {
            case Refiner::None:
                out.fit.support = sel;
                break;
            case Refiner::OLS: {
                out.fit = ols_refit(x, y, sel);
                break;
            }
            case Refiner::LassoEBIC: {
                if (sel.empty()) {
                    out.fit = ols_refit(x, y, sel);
                    break;
                }
                const DataMatrix xs = x.select_cols(sel);
                const Vector grid = lasso_lambda_grid(xs, y);
                const auto path = lasso_path(xs, y, grid);
                const double tss_floor = [&] {
                    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
                    double t = 0.0;
                    for (double v : y) t += (v - ybar) * (v - ybar);
                    return std::max(1e-24 * t, std::numeric_limits<double>::min());
                }();
                std::size_t best = 0;
                double best_value = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < path.size(); ++k) {
                    const double value =
                        ebic(std::max(path[k].rss, tss_floor), n, p, path[k].support.size());
                    if (value < best_value) {
                        best_value = value;
                        best = k;
                    }
                }
                out.fit = path[best];
                for (auto& j : out.fit.support) j = sel[j];
                break;
            }
        }
    } catch (const PipelineStageError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineStageError(std::string(refiner_name(spec.refiner)), e.what());
    }

    // Report in ascending original index, coefficients kept aligned.
    FitResult& fit = out.fit;
    std::vector<std::size_t> order(fit.support.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fit.support[a] < fit.support[b]; });
    const auto support = fit.support;
    const auto coef = fit.coefficients;
    for (std::size_t i = 0; i < order.size(); ++i) {
        fit.support[i] = support[order[i]];
        if (!coef.empty()) fit.coefficients[i] = coef[order[i]];
    }
    return out;
}

Vector predict(const FitResult& fit, const DataMatrix& x) {
    Vector out(x.rows(), fit.intercept);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t c = 0; c < fit.support.size(); ++c)
            out[i] += x(i, fit.support[c]) * fit.coefficients[c];
    return out;
}

}  // namespace holp
