#pragma once

#include "retas/catalog.hpp"
#include "retas/kernels.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace retas {

/// Label for an aftershock whose parent fell outside a rectangular simulation window.
inline constexpr std::size_t kExternalParent = std::numeric_limits<std::size_t>::max();

struct SimulatedCatalog {
    Catalog catalog;
    /// 0 for a main-shock, otherwise parent index + 1 in time order.
    std::vector<std::size_t> labels;
    /// 0 for main-shocks, parent generation + 1 for aftershocks.
    std::vector<std::size_t> generation;
};

struct SimConfig {
    RetasParams params;
    MagnitudeParams mag{5.0, 0.0};
    double nu_mean_x = 0.0;
    double nu_mean_y = 0.0;
    double nu_var_x = 0.05;
    double nu_var_y = 0.10;
    double T = 250.0;
    std::uint64_t seed = 1;
    std::uint64_t replicate = 0;
    SpatialWindow window;
    std::size_t max_events = 1'000'000;
};

/// Generator for (seed, stream): mt19937_64 seeded through splitmix64 so that nearby seeds
/// and streams give unrelated sequences.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// Omori lag by inversion, t = c((1-U)^(1/(1-p)) - 1). U = 0 is redrawn.
double sample_omori_lag(std::mt19937_64& rng, const RetasParams& params);
double sample_magnitude(std::mt19937_64& rng, const MagnitudeParams& mag);

/// Gamma renewal main-shocks on [0, T] plus Poisson offspring cascades. Events outside a
/// rectangular window are dropped after generation; their retained offspring are labelled
/// kExternalParent. Throws NumericalError once more than max_events are generated and
/// std::invalid_argument for T <= 0.
SimulatedCatalog simulate_catalog(const SimConfig& cfg);

/// The configuration used in the simulation study: kappa 0.8, beta 1.25, p 1.2, c 0.01,
/// variances (0.01, 0.02), A 0.5, alpha 1, gamma 5, background variances (0.05, 0.10).
SimConfig study_sim_config(double T, double kappa = 0.8, double beta = 1.25);

} // namespace retas
