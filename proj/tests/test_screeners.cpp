#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "holp/linalg.hpp"
#include "holp/metrics.hpp"
#include "holp/screening.hpp"
#include "holp/simulation.hpp"
#include "test_util.hpp"

using namespace holp;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

std::vector<std::size_t> idx(std::initializer_list<std::size_t> v) { return v; }

double naive_omega(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < n; ++l)
            if (i != l && x[i] < x[l] && y[i] < y[l]) ++count;
    return static_cast<double>(count) / static_cast<double>(n * (n - 1));
}

DataMatrix orthonormal_rows(std::size_t n, std::size_t p, std::uint64_t seed) {
    auto q = testutil::random_orthogonal(p, seed);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return q.transpose().select_rows(rows);
}

}  // namespace

TEST_SUITE("holp") {
    TEST_CASE("orthonormal rows reduce HOLP to |X^T Y|") {
        auto x = orthonormal_rows(6, 30, 1);
        auto y = random_vector(6, 2);
        auto h = holp_scores(x, y);
        auto s = sis_scores(x, y, SisOptions{false});
        CHECK(testutil::max_abs_diff_vec(h.scores, s.scores) <= 1e-12);
    }

    TEST_CASE("matches the pseudo-inverse oracle") {
        auto x = random_matrix(8, 40, 3);
        auto y = random_vector(8, 4);
        auto h = holp_scores(x, y);
        auto b = mat_vec(pinv_from_svd(svd_small(x)), y);
        for (std::size_t j = 0; j < 40; ++j) CHECK(h.scores[j] == doctest::Approx(std::abs(b[j])).epsilon(1e-8));
    }

    TEST_CASE("noiseless sparse model: top-5 recovery agrees with the oracle") {
        // n = 50, p = 1000, Sigma = I, beta = 5 on the first five predictors.
        // Recovery of the exact top-5 set is rare at this size; the rate is
        // reported and must coincide with the rate under the SVD oracle.
        std::size_t hits = 0, oracle_hits = 0;
        const std::set<std::size_t> truth{0, 1, 2, 3, 4};
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto x = random_matrix(50, 1000, 1000 + seed);
            Vector beta(1000, 0.0);
            for (std::size_t j = 0; j < 5; ++j) beta[j] = 5.0;
            auto y = mat_vec(x, beta);
            auto sel = rank_select(holp_scores(x, y), 5);
            auto b = mat_vec(pinv_from_svd(svd_small(x)), y);
            for (double& v : b) v = std::abs(v);
            auto oracle = rank_select(b, 5);
            CHECK(sel.indices == oracle.indices);
            hits += std::set<std::size_t>(sel.indices.begin(), sel.indices.end()) == truth;
            oracle_hits += std::set<std::size_t>(oracle.indices.begin(), oracle.indices.end()) == truth;
        }
        MESSAGE("exact top-5 recovery " << hits << "/20");
        CHECK(hits == oracle_hits);
    }

    TEST_CASE("p <= n is a degenerate regime") {
        auto x = random_matrix(10, 10, 5);
        auto y = random_vector(10, 6);
        CHECK_THROWS_AS((void)holp_scores(x, y), DegenerateRegime);
    }

    TEST_CASE("duplicated rows surface NotPositiveDefinite with a ridge hint") {
        auto x = random_matrix(5, 20, 7);
        for (std::size_t j = 0; j < 20; ++j) x(4, j) = x(3, j);
        auto y = random_vector(5, 8);
        try {
            (void)holp_scores(x, y);
            FAIL("expected NotPositiveDefinite");
        } catch (const NotPositiveDefinite& e) {
            CHECK(std::string(e.what()).find("ridge_holp_scores") != std::string::npos);
        }
    }

    TEST_CASE("centering falls back to ridge when the centered Gram is singular") {
        auto x = random_matrix(10, 40, 9);
        auto y = random_vector(10, 10);
        ScreeningParams params;
        params.center = true;
        auto h = holp_scores(x, y, params);
        CHECK(h.method == Method::RidgeHOLP);
        REQUIRE(!h.warnings.empty());
        CHECK(h.warnings[0].find("ridge") != std::string::npos);
    }

    TEST_CASE("response length mismatch") {
        auto x = random_matrix(5, 20, 11);
        auto y = random_vector(4, 12);
        CHECK_THROWS_AS((void)holp_scores(x, y), DimensionMismatch);
    }
}

TEST_SUITE("ridge holp") {
    TEST_CASE("small r approaches HOLP") {
        auto x = random_matrix(10, 50, 13);
        auto y = random_vector(10, 14);
        auto h = holp_scores(x, y);
        auto r = ridge_holp_scores(x, y, 1e-10);
        for (std::size_t j = 0; j < 50; ++j) CHECK(r.scores[j] == doctest::Approx(h.scores[j]).epsilon(1e-6));
    }

    TEST_CASE("push-through identity on a 5x12 instance") {
        auto x = random_matrix(5, 12, 15);
        auto y = random_vector(5, 16);
        for (double r : {1e-3, 1.0, 10.0}) {
            auto lhs = ridge_holp_scores(x, y, r);
            auto xtx = mat_mul(x, x, Trans::Yes);
            for (std::size_t j = 0; j < 12; ++j) xtx(j, j) += r;
            auto rhs = spd_solve(spd_factor(xtx), mat_tvec(x, y));
            for (std::size_t j = 0; j < 12; ++j)
                CHECK(lhs.scores[j] == doctest::Approx(std::abs(rhs[j])).epsilon(1e-9));
        }
    }

    TEST_CASE("defined when p <= n") {
        auto x = random_matrix(20, 5, 17);
        auto y = random_vector(20, 18);
        auto s = ridge_holp_scores(x, y, 1.0);
        CHECK(s.scores.size() == 5);
    }

    TEST_CASE("r must be positive") {
        auto x = random_matrix(3, 6, 19);
        auto y = random_vector(3, 20);
        CHECK_THROWS_AS((void)ridge_holp_scores(x, y, 0.0), InvalidArgument);
        CHECK_THROWS_AS((void)ridge_holp_scores(x, y, -1.0), InvalidArgument);
    }

    TEST_CASE("r = 10 tracks HOLP on compound symmetry design") {
        SimScenario sc;
        sc.family = Family::CompoundSymmetry;
        sc.rho = 0.6;
        sc.r_squared = 0.9;
        sc.seed = 7;
        ScreeningParams params;
        const auto ridge = inclusion_probability(sc, Method::RidgeHOLP, params, 100, 200);
        CHECK(std::abs(ridge.inclusion_probability - 0.830) <= 0.1);
    }
}

TEST_SUITE("divide holp") {
    TEST_CASE("one partition equals top-d HOLP") {
        auto x = random_matrix(30, 200, 21);
        auto y = random_vector(30, 22);
        auto d = divide_holp_scores(x, y, 1, 25, 99);
        auto ref = rank_select(holp_scores(x, y), 25);
        CHECK(d.indices == ref.indices);
    }

    TEST_CASE("blocks smaller than the minimum are rejected") {
        auto x = random_matrix(30, 200, 23);
        auto y = random_vector(30, 24);
        CHECK_THROWS_AS((void)divide_holp_scores(x, y, 30, 10), InvalidArgument);
        CHECK_THROWS_AS((void)divide_holp_scores(x, y, 0, 10), InvalidArgument);
    }

    TEST_CASE("union holds at most m * ceil(d/m) distinct indices") {
        auto x = random_matrix(40, 300, 25);
        auto y = random_vector(40, 26);
        auto d = divide_holp_scores(x, y, 3, 20, 5);
        std::set<std::size_t> uniq(d.indices.begin(), d.indices.end());
        CHECK(uniq.size() == d.indices.size());
        CHECK(d.indices.size() <= 21);
        CHECK(d.indices.size() >= 7);
    }

    TEST_CASE("seeded shuffle is reproducible") {
        auto x = random_matrix(40, 300, 27);
        auto y = random_vector(40, 28);
        CHECK(divide_holp_scores(x, y, 2, 30, 11).indices == divide_holp_scores(x, y, 2, 30, 11).indices);
    }

    TEST_CASE("block failure names the block") {
        auto x = random_matrix(20, 15, 29);
        auto y = random_vector(20, 30);
        try {
            (void)divide_holp_scores(x, y, 1, 5);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("block 0") != std::string::npos);
        }
    }

    TEST_CASE("m = 2 is no worse than HOLP when n is close to p") {
        SimScenario sc;
        sc.family = Family::CompoundSymmetry;
        sc.rho = 0.6;
        sc.n = 900;
        sc.p = 1000;
        sc.r_squared = 0.9;
        sc.seed = 3;
        ScreeningParams params;
        const auto holp = inclusion_outcomes(sc, Method::HOLP, params, 100, 30);
        params.partitions = 2;
        const auto divided = inclusion_outcomes(sc, Method::DivideHOLP, params, 100, 30);
        const auto h = std::count(holp.begin(), holp.end(), true);
        const auto d = std::count(divided.begin(), divided.end(), true);
        MESSAGE("HOLP " << h << "/30, Divide-HOLP " << d << "/30");
        CHECK(d >= h);
    }
}

TEST_SUITE("sis") {
    TEST_CASE("response orthogonal to every column") {
        // Columns and the response are centered and mutually orthogonal.
        auto x = DataMatrix::from_rows({{1, 1}, {-1, 1}, {1, -1}, {-1, -1}});
        const double y[] = {1, -1, -1, 1};
        auto s = sis_scores(x, y);
        CHECK(testutil::max_abs(s.scores) <= 1e-14);
    }

    TEST_CASE("duplicated column scores equal") {
        auto x = random_matrix(20, 4, 31);
        for (std::size_t i = 0; i < 20; ++i) x(i, 1) = x(i, 0);
        auto y = random_vector(20, 32);
        auto s = sis_scores(x, y);
        CHECK(s.scores[0] == s.scores[1]);
    }

    TEST_CASE("zero-variance column scores zero with a warning") {
        auto x = random_matrix(15, 5, 33);
        for (std::size_t i = 0; i < 15; ++i) x(i, 2) = 3.0;
        auto y = random_vector(15, 34);
        auto s = sis_scores(x, y);
        CHECK(s.scores[2] == 0.0);
        CHECK(s.warnings.size() == 1);
    }

    TEST_CASE("scores are (n - 1) times the absolute sample correlation") {
        auto x = random_matrix(25, 3, 35);
        auto y = random_vector(25, 36);
        auto s = sis_scores(x, y);
        for (std::size_t j = 0; j < 3; ++j) {
            const auto c = x.col(j);
            const double mx = std::accumulate(c.begin(), c.end(), 0.0) / 25;
            const double my = std::accumulate(y.begin(), y.end(), 0.0) / 25;
            double sxy = 0, sxx = 0, syy = 0;
            for (std::size_t i = 0; i < 25; ++i) {
                sxy += (c[i] - mx) * (y[i] - my);
                sxx += (c[i] - mx) * (c[i] - mx);
                syy += (y[i] - my) * (y[i] - my);
            }
            CHECK(s.scores[j] == doctest::Approx(24.0 * std::abs(sxy) / std::sqrt(sxx * syy)).epsilon(1e-12));
        }
    }

    TEST_CASE("marginally null predictor ranks higher under HOLP than SIS") {
        SimScenario sc;
        sc.family = Family::MarginalNull;
        sc.rho = 0.5;
        sc.r_squared = 0.9;
        sc.seed = 17;
        std::size_t holp_hits = 0, sis_hits = 0;
        for (std::size_t r = 0; r < 50; ++r) {
            const auto data = simulate_dataset(sc, r);
            auto in_top = [&](const ScreeningScores& s) {
                const auto sel = rank_select(s, 100);
                return std::find(sel.indices.begin(), sel.indices.end(), 4) != sel.indices.end();
            };
            holp_hits += in_top(holp_scores(data.x, data.y));
            sis_hits += in_top(sis_scores(data.x, data.y));
        }
        MESSAGE("x5 in top 100: HOLP " << holp_hits << ", SIS " << sis_hits);
        CHECK(holp_hits > sis_hits);
    }
}

TEST_SUITE("rrcs") {
    TEST_CASE("perfect concordance gives 1/4") {
        const double x[] = {1, 2, 3, 4, 5, 6};
        const double y[] = {-3, -1, 0, 2, 7, 9};
        CHECK(rrcs_omega(x, y) == doctest::Approx(0.5));
        auto xm = DataMatrix::column(x);
        CHECK(rrcs_scores(xm, y).scores[0] == doctest::Approx(0.25));
    }

    TEST_CASE("merge count equals the pair enumeration") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto x = random_vector(50, 100 + seed);
            auto y = random_vector(50, 200 + seed);
            CHECK(rrcs_omega(x, y) == naive_omega(x, y));
        }
    }

    TEST_CASE("ties never count as concordant") {
        const double x[] = {1, 1, 2, 2, 3, 3, 1, 2};
        const double y[] = {0, 1, 1, 0, 2, 2, 2, 1};
        CHECK(rrcs_omega(x, y) == naive_omega(x, y));
    }

    TEST_CASE("independent column scores near zero for large n") {
        auto x = random_vector(4000, 37);
        auto y = random_vector(4000, 38);
        CHECK(std::abs(rrcs_omega(x, y) - 0.25) < 0.02);
    }

    TEST_CASE("n < 2 is rejected") {
        const double v[] = {1.0};
        CHECK_THROWS_AS((void)rrcs_omega(v, v), InvalidArgument);
    }
}

TEST_SUITE("forward regression") {
    TEST_CASE("orthonormal columns pick the support by |beta|") {
        auto q = testutil::random_orthogonal(40, 39);
        std::vector<std::size_t> cols(12);
        std::iota(cols.begin(), cols.end(), 0);
        auto x = q.select_cols(cols);  // 40 x 12, orthonormal columns
        // Remove the column means so the intercept does not interfere.
        for (std::size_t j = 0; j < 12; ++j) {
            double m = 0;
            for (std::size_t i = 0; i < 40; ++i) m += x(i, j);
            for (std::size_t i = 0; i < 40; ++i) x(i, j) -= m / 40;
        }
        Vector beta(12, 0.0);
        beta[7] = 4.0;
        beta[2] = -3.0;
        beta[10] = 2.0;
        auto y = mat_vec(x, beta);
        auto s = forward_regression_rank(x, y, 3);
        CHECK(rank_select(s, 3).indices == idx({7, 2, 10}));
        CHECK(s.scores[7] == 3.0);
        CHECK(s.scores[2] == 2.0);
        CHECK(s.scores[10] == 1.0);
    }

    TEST_CASE("d = 0 gives an empty selection") {
        auto x = random_matrix(10, 30, 40);
        auto y = random_vector(10, 41);
        auto s = forward_regression_rank(x, y, 0);
        CHECK(testutil::max_abs(s.scores) == 0.0);
        CHECK(rank_select(s, 5).indices.empty());
    }

    TEST_CASE("d beyond n - 1 is rejected") {
        auto x = random_matrix(10, 30, 42);
        auto y = random_vector(10, 43);
        CHECK_THROWS_AS((void)forward_regression_rank(x, y, 10), InvalidArgument);
    }

    TEST_CASE("each step maximizes the RSS reduction") {
        auto x = random_matrix(25, 15, 44);
        auto y = random_vector(25, 45);
        auto s = forward_regression_rank(x, y, 4);
        auto order = rank_select(s, 4).indices;
        std::vector<std::size_t> chosen;
        for (std::size_t step = 0; step < 4; ++step) {
            double best = INFINITY;
            std::size_t arg = 0;
            for (std::size_t j = 0; j < 15; ++j) {
                if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
                auto trial = chosen;
                trial.push_back(j);
                // Brute-force OLS with intercept through the normal equations.
                const std::size_t k = trial.size() + 1;
                DataMatrix z(25, k, 1.0);
                for (std::size_t i = 0; i < 25; ++i)
                    for (std::size_t c = 0; c < trial.size(); ++c) z(i, c + 1) = x(i, trial[c]);
                auto coef = spd_solve(spd_factor(mat_mul(z, z, Trans::Yes)), mat_tvec(z, y));
                auto fit = mat_vec(z, coef);
                double rss = 0;
                for (std::size_t i = 0; i < 25; ++i) rss += (y[i] - fit[i]) * (y[i] - fit[i]);
                if (rss < best - 1e-12) {
                    best = rss;
                    arg = j;
                }
            }
            chosen.push_back(arg);
        }
        CHECK(order == chosen);
    }

    TEST_CASE("collinear candidates are skipped") {
        auto x = random_matrix(20, 4, 46);
        for (std::size_t i = 0; i < 20; ++i) {
            x(i, 1) = 2.0 * x(i, 0);
            x(i, 2) = x(i, 0);
        }
        Vector y(20);
        for (std::size_t i = 0; i < 20; ++i) y[i] = x(i, 0) + 0.1 * x(i, 3);
        auto s = forward_regression_rank(x, y, 3);
        // After one of the copies enters, the other two carry no new direction.
        std::size_t copies = (s.scores[0] > 0) + (s.scores[1] > 0) + (s.scores[2] > 0);
        CHECK(copies == 1);
        CHECK(s.scores[3] > 0);
        CHECK(!s.warnings.empty());
    }
}

TEST_SUITE("selection rules") {
    TEST_CASE("top-d picks the largest") {
        const double s[] = {0.1, 0.9, 0.5};
        CHECK(rank_select(s, 2).indices == idx({1, 2}));
    }

    TEST_CASE("ties go to the lower index") {
        const double s[] = {1, 1, 1, 1, 1};
        CHECK(rank_select(s, 3).indices == idx({0, 1, 2}));
    }

    TEST_CASE("d = p returns everything") {
        const double s[] = {0.3, 0.2, 0.8, 0.1};
        CHECK(rank_select(s, 4).indices == idx({2, 0, 1, 3}));
    }

    TEST_CASE("zero scores are never selected by top-d") {
        const double s[] = {0.0, 0.4, 0.0, 0.2};
        CHECK(rank_select(s, 4).indices == idx({1, 3}));
    }

    TEST_CASE("threshold zero keeps every index") {
        ScreeningScores sc;
        sc.scores = {0.0, 0.4, 0.0, 0.2};
        CHECK(threshold_select(sc, 0.0).indices == idx({1, 3, 0, 2}));
    }

    TEST_CASE("threshold above the maximum is empty") {
        ScreeningScores sc;
        sc.scores = {0.1, 0.4};
        CHECK(threshold_select(sc, 0.5).indices.empty());
        CHECK_THROWS_AS((void)threshold_select(sc, -1.0), InvalidArgument);
    }

    TEST_CASE("a separating threshold recovers the support exactly") {
        auto x = random_matrix(150, 300, 47);
        Vector beta(300, 0.0);
        beta[3] = 4;
        beta[50] = -5;
        beta[222] = 6;  // n / p = 1/2 keeps the projection strongly diagonal
        auto y = mat_vec(x, beta);
        auto s = holp_scores(x, y);
        double min_true = INFINITY, max_false = 0;
        for (std::size_t j = 0; j < 300; ++j) {
            if (beta[j] != 0) min_true = std::min(min_true, s.scores[j]);
            else max_false = std::max(max_false, s.scores[j]);
        }
        REQUIRE(min_true > max_false);
        auto sel = threshold_select(s, 0.5 * (min_true + max_false));
        std::set<std::size_t> got(sel.indices.begin(), sel.indices.end());
        CHECK(got == std::set<std::size_t>{3, 50, 222});
    }

    TEST_CASE("method names round-trip") {
        for (auto m : {Method::HOLP, Method::RidgeHOLP, Method::DivideHOLP, Method::SIS, Method::RRCS,
                       Method::ForwardRegression})
            CHECK(parse_method(method_name(m)) == m);
        CHECK_THROWS_AS((void)parse_method("lasso"), InvalidArgument);
    }
}
