#pragma once

// Seeded generators for the benchmark designs:
//   Independent      iid N(0,1) predictors, random signed beta on {0..4}
//   CompoundSymmetry corr rho between every pair, beta = 5 on {0..4}
//   Autoregressive   corr rho^|i-j|, beta_0 = 3, beta_3 = 1.5, beta_6 = 2
//   Factor           X = F L^T + E with k factors, beta = 5 on {0..4}
//   Group            15 signal columns sharing three latent templates
//   Extreme          signal columns dominated by correlated decoys
//   MarginalNull     compound symmetry with x_4 marginally uncorrelated to y
// Indices are 0-based. No p x p matrix is ever formed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "holp/matrix.hpp"

namespace holp {

enum class Family { Independent, CompoundSymmetry, Autoregressive, Factor, Group, Extreme, MarginalNull };

std::string_view family_name(Family f);
Family parse_family(std::string_view s);

struct SimScenario {
    Family family = Family::Independent;
    double rho = 0.0;          // CompoundSymmetry, Autoregressive, MarginalNull
    std::size_t factors = 0;   // Factor
    double delta2 = 0.0;       // Group
    std::size_t n = 100;
    std::size_t p = 1000;
    double r_squared = 0.9;
    std::uint64_t seed = 0;
    // Overrides the support size for Independent, CompoundSymmetry,
    // Autoregressive and Factor designs.
    std::optional<std::size_t> sparsity;
    // Factor loadings drawn once per scenario seed instead of per replicate.
    bool freeze_loadings = false;

    /// Throws InvalidArgument describing the first violated constraint.
    void validate() const;
    std::string label() const;

    friend bool operator==(const SimScenario&, const SimScenario&) = default;
};

struct SimDataset {
    DataMatrix x;
    Vector y;
    Vector beta;                       // length p
    std::vector<std::size_t> support;  // ascending
    double sigma2 = 0.0;
    double signal_var = 0.0;
    DataMatrix loadings;               // p x k, Factor designs only
};

/// Thin wrapper so every generator draws from one documented engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double normal() { return normal_(engine_); }
    bool bernoulli(double prob) { return std::bernoulli_distribution(prob)(engine_); }
    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of replicate `replicate` under `seed`:
/// splitmix64(seed ^ splitmix64(replicate + 1)). Streams for different
/// replicates are independent of scheduling order.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate);

struct BetaDraw {
    Vector beta;
    std::vector<std::size_t> support;
};

BetaDraw make_beta(const SimScenario& sc, Rng& rng);

/// Factor loadings L (p x k), iid N(0,1).
DataMatrix draw_loadings(std::size_t p, std::size_t k, Rng& rng);

/// n x p design. `loadings` is required for Factor designs.
DataMatrix draw_design(const SimScenario& sc, Rng& rng, const DataMatrix* loadings = nullptr);

/// Population var(x^T beta) for the design's covariance.
double signal_variance(const SimScenario& sc, std::span<const double> beta,
                       const DataMatrix* loadings = nullptr);

/// sigma^2 = signal (1 - R^2) / R^2.
double calibrate_noise(double signal_var, double r_squared);

/// Replicate `replicate` of the scenario: beta, loadings (Factor), design,
/// then noise, all from stream_seed(seed, replicate).
SimDataset simulate_dataset(const SimScenario& sc, std::uint64_t replicate = 0);

}  // namespace holp
