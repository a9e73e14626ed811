#include "holp/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "holp/linalg.hpp"

namespace holp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class Fn>
auto run_replicate(std::size_t r, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ReplicateError&) {
        throw;
    } catch (const std::exception& e) {
        throw ReplicateError(r, e.what());
    }
}

}  // namespace

SelectionMetrics score_selection(std::span<const std::size_t> selected, const FitResult* fit,
                                 const SimDataset& truth) {
    const std::size_t p = truth.beta.size();
    std::vector<bool> in_sel(p, false);
    std::size_t distinct = 0;
    for (std::size_t j : selected) {
        if (j >= p) throw InvalidArgument("score_selection: index " + std::to_string(j) + " >= p");
        if (!in_sel[j]) ++distinct;
        in_sel[j] = true;
    }
    SelectionMetrics m;
    std::size_t hits = 0;
    for (std::size_t j : truth.support) {
        if (in_sel[j]) ++hits;
        else ++m.false_negatives;
    }
    m.false_positives = distinct - hits;
    m.covered = m.false_negatives == 0;
    m.exact = m.covered && m.false_positives == 0;
    m.size = distinct;
    if (fit != nullptr) {
        Vector full(p, 0.0);
        for (std::size_t c = 0; c < fit->support.size(); ++c) full[fit->support[c]] = fit->coefficients[c];
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double e = full[j] - truth.beta[j];
            s += e * e;
        }
        m.l2_error = std::sqrt(s);
    }
    return m;
}

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (double v : values) {
        ++k;
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
    }
    s.count = k;
    s.mean = mean;
    s.sd = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1)) : 0.0;
    return s;
}

namespace {

void fill_summaries(ExperimentReport& rep, const std::vector<SelectionMetrics>& per) {
    std::vector<double> fn, fp, cov, ex, sz, l2, t;
    for (const auto& m : per) {
        fn.push_back(static_cast<double>(m.false_negatives));
        fp.push_back(static_cast<double>(m.false_positives));
        cov.push_back(m.covered ? 1.0 : 0.0);
        ex.push_back(m.exact ? 1.0 : 0.0);
        sz.push_back(static_cast<double>(m.size));
        if (m.l2_error) l2.push_back(*m.l2_error);
        t.push_back(m.wall_time_s);
    }
    rep.false_negatives = summarize(fn);
    rep.false_positives = summarize(fp);
    rep.coverage = summarize(cov);
    rep.exact = summarize(ex);
    rep.size = summarize(sz);
    rep.l2_error = summarize(l2);
    rep.wall_time_s = summarize(t);
    rep.inclusion_probability = rep.coverage.mean;
}

}  // namespace

std::vector<bool> inclusion_outcomes(const SimScenario& scenario, Method method,
                                     const ScreeningParams& params, std::size_t d,
                                     std::size_t replicates, std::size_t threads) {
    scenario.validate();
    std::vector<char> hit(replicates, 0);
    parallel_for(replicates, threads, [&](std::size_t r) {
        run_replicate(r, [&] {
            const SimDataset ds = simulate_dataset(scenario, r);
            ScreeningParams local = params;
            local.seed = stream_seed(params.seed, r);
            const auto sel = screen_top_d(ds.x, ds.y, method, local, d);
            hit[r] = score_selection(sel.indices, nullptr, ds).covered ? 1 : 0;
            return 0;
        });
    });
    return std::vector<bool>(hit.begin(), hit.end());
}

ExperimentReport inclusion_probability(const SimScenario& scenario, Method method,
                                       const ScreeningParams& params, std::size_t d,
                                       std::size_t replicates, std::size_t threads) {
    return rule_inclusion(scenario, method, params, SelectionRule::top_d(d), replicates, threads);
}

ExperimentReport rule_inclusion(const SimScenario& scenario, Method method,
                                const ScreeningParams& params, const SelectionRule& rule,
                                std::size_t replicates, std::size_t threads) {
    if (replicates == 0) throw InvalidArgument("inclusion_probability: replicates must be >= 1");
    scenario.validate();
    const bool top = rule.kind == SelectionRule::Kind::TopD;
    if (!top && method == Method::DivideHOLP) {
        throw InvalidArgument("threshold selection needs a score-producing screener");
    }
    const std::size_t d = top ? (rule.d == 0 ? scenario.n : rule.d) : 0;
    std::vector<SelectionMetrics> per(replicates);
    parallel_for(replicates, threads, [&](std::size_t r) {
        run_replicate(r, [&] {
            const SimDataset ds = simulate_dataset(scenario, r);
            ScreeningParams local = params;
            local.seed = stream_seed(params.seed, r);
            const auto t0 = Clock::now();
            const auto sel = top ? screen_top_d(ds.x, ds.y, method, local, d)
                                 : threshold_select(compute_scores(ds.x, ds.y, method, local), rule.gamma);
            const double elapsed = seconds_since(t0);
            per[r] = score_selection(sel.indices, nullptr, ds);
            per[r].wall_time_s = elapsed;
            return 0;
        });
    });
    ExperimentReport rep;
    rep.scenario = scenario;
    rep.method = std::string(method_name(method));
    rep.d = d;
    rep.replicates = replicates;
    fill_summaries(rep, per);
    return rep;
}

bool separates(std::span<const double> scores, std::span<const std::size_t> support) {
    if (support.empty()) return false;
    std::vector<bool> in(scores.size(), false);
    double min_true = std::numeric_limits<double>::infinity();
    for (std::size_t j : support) {
        in[j] = true;
        min_true = std::min(min_true, scores[j]);
    }
    double max_false = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (!in[j]) max_false = std::max(max_false, scores[j]);
    return min_true > max_false;
}

SeparationResult separation_probability(const SimScenario& scenario, Method method,
                                        const ScreeningParams& params, std::size_t replicates,
                                        std::size_t threads) {
    if (replicates == 0) throw InvalidArgument("separation_probability: replicates must be >= 1");
    if (scenario.sparsity == std::size_t{0}) {
        SimScenario rest = scenario;
        rest.sparsity.reset();
        rest.validate();
        return {0.0, {std::to_string(replicates) + " replicate(s) with empty support counted as failures"}};
    }
    scenario.validate();
    std::vector<char> ok(replicates, 0);
    std::vector<char> empty(replicates, 0);
    parallel_for(replicates, threads, [&](std::size_t r) {
        run_replicate(r, [&] {
            const SimDataset ds = simulate_dataset(scenario, r);
            if (ds.support.empty()) {
                empty[r] = 1;
                return 0;
            }
            ScreeningParams local = params;
            local.seed = stream_seed(params.seed, r);
            if (local.target_size == 0) local.target_size = ds.support.size();
            const auto s = compute_scores(ds.x, ds.y, method, local);
            ok[r] = separates(s.scores, ds.support) ? 1 : 0;
            return 0;
        });
    });
    SeparationResult out;
    std::size_t hits = 0, empties = 0;
    for (std::size_t r = 0; r < replicates; ++r) {
        hits += ok[r];
        empties += empty[r];
    }
    if (empties > 0) {
        out.warnings.push_back(std::to_string(empties) +
                               " replicate(s) with empty support counted as failures");
    }
    out.probability = static_cast<double>(hits) / static_cast<double>(replicates);
    return out;
}

std::string pipeline_label(const PipelineSpec& spec) {
    std::ostringstream os;
    os << method_name(spec.screener);
    if (spec.screener == Method::RidgeHOLP) os << "(r=" << spec.params.ridge << ")";
    if (spec.screener == Method::DivideHOLP) os << "(m=" << spec.params.partitions << ")";
    if (spec.rule.kind == SubmodelRule::Kind::EBICSized) {
        os << "+ebics";
        if (spec.rule.size) os << "(" << *spec.rule.size << ")";
    } else {
        os << "+top";
        if (spec.rule.size) os << "(" << *spec.rule.size << ")";
        else os << "(n)";
    }
    os << "+" << refiner_name(spec.refiner);
    return os.str();
}

ExperimentReport pipeline_experiment(const SimScenario& scenario, const PipelineSpec& spec,
                                     std::size_t replicates, std::size_t threads) {
    if (replicates == 0) throw InvalidArgument("pipeline_experiment: replicates must be >= 1");
    scenario.validate();
    std::vector<SelectionMetrics> per(replicates);
    std::vector<std::string> warnings;
    parallel_for(replicates, threads, [&](std::size_t r) {
        run_replicate(r, [&] {
            const SimDataset ds = simulate_dataset(scenario, r);
            PipelineSpec local = spec;
            local.params.seed = stream_seed(spec.params.seed, r);
            const auto t0 = Clock::now();
            const auto res = run_pipeline(ds.x, ds.y, local);
            const double elapsed = seconds_since(t0);
            const bool has_fit = spec.refiner != Refiner::None;
            per[r] = score_selection(res.fit.support, has_fit ? &res.fit : nullptr, ds);
            per[r].wall_time_s = elapsed;
            return 0;
        });
    });
    ExperimentReport rep;
    rep.scenario = scenario;
    rep.method = pipeline_label(spec);
    rep.d = spec.rule.kind == SubmodelRule::Kind::TopD ? spec.rule.size.value_or(scenario.n) : 0;
    rep.replicates = replicates;
    fill_summaries(rep, per);
    rep.warnings = std::move(warnings);
    return rep;
}

TrendDims consistency_schedule(std::size_t n, Family family, double r_squared) {
    const double nn = static_cast<double>(n);
    TrendDims t;
    if (family == Family::Extreme) {
        t.p = 20 * static_cast<std::size_t>(std::floor(std::exp(std::pow(nn, 0.25))));
    } else {
        t.p = 4 * static_cast<std::size_t>(std::floor(std::exp(std::cbrt(nn))));
    }
    const double base = std::floor(std::pow(nn, 0.25));
    t.s = static_cast<std::size_t>(r_squared >= 0.9 ? std::floor(1.5 * base) : base);
    return t;
}

std::vector<TimingPoint> timing_run(Method method, const ScreeningParams& params,
                                    const TimingSetup& setup) {
    if (setup.grid.empty()) throw InvalidArgument("timing_run: grid must be non-empty");
    std::vector<TimingPoint> out;
    for (std::size_t g : setup.grid) {
        SimScenario sc = setup.base;
        std::size_t d = setup.d;
        if (setup.axis == TimingSetup::Axis::P) sc.p = g;
        else d = g;
        const SimDataset ds = simulate_dataset(sc, 0);
        auto once = [&] {
            const auto t0 = Clock::now();
            const auto sel = screen_top_d(ds.x, ds.y, method, params, d);
            const double elapsed = seconds_since(t0);
            if (sel.indices.size() > d) throw Error("timing_run: selection larger than d");
            return elapsed;
        };
        once();  // warm-up
        TimingPoint pt;
        pt.size = g;
        for (std::size_t r = 0; r < std::max<std::size_t>(setup.repetitions, 1); ++r)
            pt.samples_s.push_back(once());
        std::vector<double> sorted = pt.samples_s;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        pt.median_s = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        out.push_back(std::move(pt));
    }
    return out;
}

CvResult kfold_cv(const DataMatrix& x, std::span<const double> y, const PipelineSpec& spec,
                  std::size_t folds, std::uint64_t seed) {
    const std::size_t n = x.rows();
    if (folds < 2 || n < 2 * folds) {
        throw InvalidArgument("kfold_cv: need k >= 2 and n >= 2k (k = " + std::to_string(folds) +
                              ", n = " + std::to_string(n) + ")");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> fold_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold_of[perm[pos]] = pos % folds;
    return kfold_cv(x, y, spec, fold_of, folds);
}

CvResult kfold_cv(const DataMatrix& x, std::span<const double> y, const PipelineSpec& spec,
                  std::span<const std::size_t> fold_of, std::size_t folds) {
    const std::size_t n = x.rows();
    if (y.size() != n || fold_of.size() != n) {
        throw DimensionMismatch("kfold_cv: X, Y and fold labels disagree in length");
    }
    if (folds < 2 || n < 2 * folds) {
        throw InvalidArgument("kfold_cv: need k >= 2 and n >= 2k");
    }
    CvResult out;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);
        if (test.empty() || train.size() < 3) {
            ++out.skipped_folds;
            out.warnings.push_back("fold " + std::to_string(f) + " skipped: too few rows");
            continue;
        }
        const DataMatrix xtr = x.select_rows(train);
        Vector ytr(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) ytr[i] = y[train[i]];
        try {
            const auto res = run_pipeline(xtr, ytr, spec);
            const FitResult refit = ols_refit(xtr, ytr, res.fit.support);
            const DataMatrix xte = x.select_rows(test);
            const Vector pred = predict(refit, xte);
            double sse = 0.0;
            for (std::size_t i = 0; i < test.size(); ++i) {
                const double e = y[test[i]] - pred[i];
                sse += e * e;
            }
            out.fold_mse.push_back(sse / static_cast<double>(test.size()));
            out.fold_size.push_back(refit.support.size());
        } catch (const Error& e) {
            ++out.skipped_folds;
            out.warnings.push_back("fold " + std::to_string(f) + " skipped: " + e.what());
        }
    }
    if (out.fold_mse.empty()) throw Error("kfold_cv: every fold failed");
    const auto s = summarize(out.fold_mse);
    out.mean_mse = s.mean;
    out.sd_mse = s.sd;
    std::vector<double> sizes(out.fold_size.begin(), out.fold_size.end());
    std::sort(sizes.begin(), sizes.end());
    const std::size_t m = sizes.size();
    out.median_size = m % 2 ? sizes[m / 2] : 0.5 * (sizes[m / 2 - 1] + sizes[m / 2]);
    return out;
}

DataMatrix screening_matrix_sample(const DataMatrix& x, std::span<const std::size_t> cols,
                                   ProjectionKind kind) {
    const DataMatrix xs = x.select_cols(cols);  // n x c
    if (kind == ProjectionKind::Sis) return mat_mul(xs, xs, Trans::Yes, Trans::No);
    const SpdFactor f = spd_factor(gram_rows(x));
    const DataMatrix w = spd_solve(f, xs);  // (X X^T)^{-1} X_S
    return mat_mul(xs, w, Trans::Yes, Trans::No);
}

double dominance_ratio(const DataMatrix& m) {
    if (m.rows() != m.cols() || m.rows() < 2) {
        throw DimensionMismatch("dominance_ratio: need a square matrix of size >= 2, got " + m.shape_str());
    }
    const std::size_t k = m.rows();
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) diag += m(i, j);
            else off += std::abs(m(i, j));
        }
    diag /= static_cast<double>(k);
    off /= static_cast<double>(k * (k - 1));
    return off > 0.0 ? diag / off : std::numeric_limits<double>::infinity();
}

}  // namespace holp
