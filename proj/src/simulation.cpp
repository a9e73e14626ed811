#include "holp/simulation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace holp {

std::string_view family_name(Family f) {
    switch (f) {
        case Family::Independent: return "independent";
        case Family::CompoundSymmetry: return "compound";
        case Family::Autoregressive: return "ar";
        case Family::Factor: return "factor";
        case Family::Group: return "group";
        case Family::Extreme: return "extreme";
        case Family::MarginalNull: return "marginal-null";
    }
    return "unknown";
}

Family parse_family(std::string_view s) {
    for (Family f : {Family::Independent, Family::CompoundSymmetry, Family::Autoregressive,
                     Family::Factor, Family::Group, Family::Extreme, Family::MarginalNull})
        if (family_name(f) == s) return f;
    throw InvalidArgument("unknown design family '" + std::string(s) + "'");
}

namespace {

constexpr std::size_t kGroupSignal = 15;
constexpr std::size_t kExtremeSignal = 5;
constexpr std::size_t kArBlockSpan = 10;

// Column of the m-th autoregressive signal: the (1, 4, 7) triple repeated
// every kArBlockSpan columns.
std::size_t ar_signal_column(std::size_t m) { return kArBlockSpan * (m / 3) + 3 * (m % 3); }

bool sparsity_adjustable(Family f) {
    return f == Family::Independent || f == Family::CompoundSymmetry ||
           f == Family::Autoregressive || f == Family::Factor;
}

// Largest index touched by the coefficient rule, plus one.
std::size_t required_width(const SimScenario& sc) {
    switch (sc.family) {
        case Family::Group: return kGroupSignal;
        case Family::Extreme: return 3 * kExtremeSignal;
        case Family::MarginalNull: return 5;
        case Family::Autoregressive: return ar_signal_column(sc.sparsity.value_or(3) - 1) + 1;
        default: return sc.sparsity.value_or(5);
    }
}

}  // namespace

void SimScenario::validate() const {
    auto fail = [&](const std::string& what) { throw InvalidArgument(label() + ": " + what); };
    if (n < 2) fail("n must be at least 2");
    if (p <= n) fail("designs require p > n");
    if (!(r_squared > 0.0 && r_squared < 1.0)) fail("R^2 must lie in (0, 1)");
    switch (family) {
        case Family::CompoundSymmetry:
        case Family::Autoregressive:
        case Family::MarginalNull:
            if (!(rho >= 0.0 && rho < 1.0)) fail("rho must lie in [0, 1)");
            break;
        case Family::Factor:
            if (factors == 0) fail("factor designs need k >= 1");
            break;
        case Family::Group:
            if (!(delta2 > 0.0)) fail("group designs need delta^2 > 0");
            break;
        default: break;
    }
    if (sparsity) {
        if (!sparsity_adjustable(family)) fail("this design has a fixed support size");
        if (*sparsity == 0) fail("support size must be positive");
    }
    if (required_width(*this) > p) fail("support does not fit in p columns");
}

std::string SimScenario::label() const {
    std::ostringstream os;
    os << family_name(family);
    switch (family) {
        case Family::CompoundSymmetry:
        case Family::Autoregressive:
        case Family::MarginalNull: os << "(rho=" << rho << ")"; break;
        case Family::Factor: os << "(k=" << factors << ")"; break;
        case Family::Group: os << "(delta2=" << delta2 << ")"; break;
        default: break;
    }
    os << " n=" << n << " p=" << p << " R2=" << r_squared;
    if (sparsity) os << " s=" << *sparsity;
    return os.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate) {
    return splitmix64(seed ^ splitmix64(replicate + 1));
}

BetaDraw make_beta(const SimScenario& sc, Rng& rng) {
    BetaDraw out;
    out.beta.assign(sc.p, 0.0);
    auto set = [&](std::size_t j, double v) {
        out.beta[j] = v;
        out.support.push_back(j);
    };
    const std::size_t s = sc.sparsity.value_or(5);
    switch (sc.family) {
        case Family::Independent: {
            const double nn = static_cast<double>(sc.n);
            const double floor_mag = 4.0 * std::log(nn) / std::sqrt(nn);
            for (std::size_t j = 0; j < s; ++j) {
                const bool negative = rng.bernoulli(0.4);
                const double mag = std::abs(rng.normal()) + floor_mag;
                set(j, negative ? -mag : mag);
            }
            break;
        }
        case Family::CompoundSymmetry:
        case Family::Factor:
            for (std::size_t j = 0; j < s; ++j) set(j, 5.0);
            break;
        case Family::Extreme:
            for (std::size_t j = 0; j < kExtremeSignal; ++j) set(j, 5.0);
            break;
        case Family::Autoregressive: {
            // 3, 1.5, 2 at indices 0, 3, 6; larger supports repeat the
            // triple in later blocks.
            constexpr double values[3] = {3.0, 1.5, 2.0};
            const std::size_t count = sc.sparsity.value_or(3);
            for (std::size_t m = 0; m < count; ++m) set(ar_signal_column(m), values[m % 3]);
            break;
        }
        case Family::Group:
            for (std::size_t j = 0; j < kGroupSignal; ++j) set(j, 3.0);
            break;
        case Family::MarginalNull:
            for (std::size_t j = 0; j < 4; ++j) set(j, 5.0);
            set(4, -20.0 * sc.rho);
            break;
    }
    return out;
}

DataMatrix draw_loadings(std::size_t p, std::size_t k, Rng& rng) {
    DataMatrix l(p, k);
    for (double& v : l.values()) v = rng.normal();
    return l;
}

DataMatrix draw_design(const SimScenario& sc, Rng& rng, const DataMatrix* loadings) {
    const std::size_t n = sc.n, p = sc.p;
    DataMatrix x(n, p);
    switch (sc.family) {
        case Family::Independent:
            for (double& v : x.values()) v = rng.normal();
            break;
        case Family::CompoundSymmetry:
        case Family::MarginalNull: {
            // x = sqrt(rho) z0 1 + sqrt(1 - rho) z, z0 shared within a row.
            const double a = std::sqrt(sc.rho), b = std::sqrt(1.0 - sc.rho);
            for (std::size_t i = 0; i < n; ++i) {
                const double common = a * rng.normal();
                for (double& v : x.row(i)) v = common + b * rng.normal();
            }
            break;
        }
        case Family::Autoregressive: {
            const double c = std::sqrt(1.0 - sc.rho * sc.rho);
            for (std::size_t i = 0; i < n; ++i) {
                auto r = x.row(i);
                r[0] = rng.normal();
                for (std::size_t j = 1; j < p; ++j) r[j] = sc.rho * r[j - 1] + c * rng.normal();
            }
            break;
        }
        case Family::Factor: {
            if (loadings == nullptr || loadings->rows() != p || loadings->cols() != sc.factors) {
                throw InvalidArgument("draw_design: factor design needs a p x k loading matrix");
            }
            const std::size_t k = sc.factors;
            Vector f(k);
            for (std::size_t i = 0; i < n; ++i) {
                for (double& v : f) v = rng.normal();
                auto r = x.row(i);
                for (std::size_t j = 0; j < p; ++j) {
                    auto lj = loadings->row(j);
                    double s = 0.0;
                    for (std::size_t t = 0; t < k; ++t) s += f[t] * lj[t];
                    r[j] = s + rng.normal();
                }
            }
            break;
        }
        case Family::Group: {
            // Column c < 15 belongs to template c mod 3 (x_1, x_4, ... share z_1).
            const double sd = std::sqrt(sc.delta2);
            for (std::size_t i = 0; i < n; ++i) {
                double z[3];
                for (double& v : z) v = rng.normal();
                auto r = x.row(i);
                for (std::size_t j = 0; j < kGroupSignal; ++j) r[j] = z[j % 3] + sd * rng.normal();
                for (std::size_t j = kGroupSignal; j < p; ++j) r[j] = rng.normal();
            }
            break;
        }
        case Family::Extreme: {
            const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
            constexpr double copy_sd = 0.1;  // N(0, 0.01)
            for (std::size_t i = 0; i < n; ++i) {
                double w[kExtremeSignal];
                double wsum = 0.0;
                for (double& v : w) {
                    v = rng.normal();
                    wsum += v;
                }
                auto r = x.row(i);
                for (std::size_t j = 0; j < kExtremeSignal; ++j) r[j] = (rng.normal() + w[j]) * inv_sqrt2;
                for (std::size_t j = 0; j < kExtremeSignal; ++j) {
                    r[j + kExtremeSignal] = r[j] + copy_sd * rng.normal();
                    r[j + 2 * kExtremeSignal] = r[j] + copy_sd * rng.normal();
                }
                for (std::size_t j = 3 * kExtremeSignal; j < p; ++j) r[j] = 0.5 * (rng.normal() + wsum);
            }
            break;
        }
    }
    return x;
}

double signal_variance(const SimScenario& sc, std::span<const double> beta,
                       const DataMatrix* loadings) {
    const std::size_t p = beta.size();
    double sq = 0.0, sum = 0.0;
    for (double b : beta) {
        sq += b * b;
        sum += b;
    }
    switch (sc.family) {
        case Family::Independent: return sq;
        case Family::CompoundSymmetry:
        case Family::MarginalNull: return (1.0 - sc.rho) * sq + sc.rho * sum * sum;
        case Family::Autoregressive: {
            std::vector<std::size_t> nz;
            for (std::size_t j = 0; j < p; ++j)
                if (beta[j] != 0.0) nz.push_back(j);
            double v = 0.0;
            for (std::size_t a : nz)
                for (std::size_t b : nz) {
                    const double lag = static_cast<double>(a > b ? a - b : b - a);
                    v += beta[a] * beta[b] * std::pow(sc.rho, lag);
                }
            return v;
        }
        case Family::Factor: {
            if (loadings == nullptr || loadings->rows() != p) {
                throw InvalidArgument("signal_variance: factor design needs the realized loadings");
            }
            Vector lb(loadings->cols(), 0.0);
            for (std::size_t j = 0; j < p; ++j) {
                if (beta[j] == 0.0) continue;
                auto lj = loadings->row(j);
                for (std::size_t t = 0; t < lb.size(); ++t) lb[t] += beta[j] * lj[t];
            }
            double v = sq;
            for (double e : lb) v += e * e;
            return v;
        }
        case Family::Group: {
            double g[3] = {0.0, 0.0, 0.0};
            double v = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                if (j < kGroupSignal) {
                    g[j % 3] += beta[j];
                    v += sc.delta2 * beta[j] * beta[j];
                } else {
                    v += beta[j] * beta[j];
                }
            }
            return v + g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        }
        case Family::Extreme: {
            // Expand x^T beta over the independent latent draws.
            const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
            double tail = 0.0;  // sum of beta over decoys j >= 15
            double v = 0.0;
            for (std::size_t j = 3 * kExtremeSignal; j < p; ++j) {
                tail += beta[j];
                v += 0.25 * beta[j] * beta[j];  // own z_j
            }
            for (std::size_t i = 0; i < kExtremeSignal; ++i) {
                const double chain = beta[i] + beta[i + kExtremeSignal] + beta[i + 2 * kExtremeSignal];
                const double cw = chain * inv_sqrt2 + 0.5 * tail;  // w_i
                const double cz = chain * inv_sqrt2;               // z_i
                v += cw * cw + cz * cz;
                v += 0.01 * (beta[i + kExtremeSignal] * beta[i + kExtremeSignal] +
                             beta[i + 2 * kExtremeSignal] * beta[i + 2 * kExtremeSignal]);
            }
            return v;
        }
    }
    return sq;
}

double calibrate_noise(double signal_var, double r_squared) {
    if (!(r_squared > 0.0 && r_squared < 1.0)) {
        throw InvalidArgument("calibrate_noise: R^2 must lie in (0, 1), got " + std::to_string(r_squared));
    }
    if (!(signal_var > 0.0)) {
        throw InvalidArgument("calibrate_noise: signal variance must be positive");
    }
    return signal_var * (1.0 - r_squared) / r_squared;
}

SimDataset simulate_dataset(const SimScenario& sc, std::uint64_t replicate) {
    sc.validate();
    Rng rng(stream_seed(sc.seed, replicate));
    SimDataset ds;
    auto b = make_beta(sc, rng);
    ds.beta = std::move(b.beta);
    ds.support = std::move(b.support);
    if (sc.family == Family::Factor) {
        if (sc.freeze_loadings) {
            Rng frozen(stream_seed(sc.seed, std::numeric_limits<std::uint64_t>::max()));
            ds.loadings = draw_loadings(sc.p, sc.factors, frozen);
        } else {
            ds.loadings = draw_loadings(sc.p, sc.factors, rng);
        }
    }
    ds.x = draw_design(sc, rng, sc.family == Family::Factor ? &ds.loadings : nullptr);
    ds.signal_var = signal_variance(sc, ds.beta, sc.family == Family::Factor ? &ds.loadings : nullptr);
    ds.sigma2 = calibrate_noise(ds.signal_var, sc.r_squared);
    const double sigma = std::sqrt(ds.sigma2);
    ds.y.assign(sc.n, 0.0);
    for (std::size_t i = 0; i < sc.n; ++i) {
        auto r = ds.x.row(i);
        double s = 0.0;
        for (std::size_t j : ds.support) s += r[j] * ds.beta[j];
        ds.y[i] = s + sigma * rng.normal();
    }
    return ds;
}

}  // namespace holp
