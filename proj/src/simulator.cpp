#include "retas/simulator.hpp"

#include "retas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace retas {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct RawEvent {
    Event e;
    std::size_t parent; // raw index, or kExternalParent for main-shocks
    std::size_t generation;
};

} // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    const std::uint64_t a = splitmix64(s);
    s ^= stream * 0xD1B54A32D192ED03ULL;
    const std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

double sample_omori_lag(std::mt19937_64& rng, const RetasParams& params) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0.0;
    double t = 0.0;
    do {
        u = unif(rng);
        t = params.c * std::expm1(std::log1p(-u) / (1.0 - params.p));
    } while (!(t > 0.0) || !std::isfinite(t));
    return t;
}

double sample_magnitude(std::mt19937_64& rng, const MagnitudeParams& mag) {
    std::exponential_distribution<double> ex(mag.gamma);
    return mag.m0 + ex(rng);
}

SimulatedCatalog simulate_catalog(const SimConfig& cfg) {
    if (!(cfg.T > 0.0)) {
        throw std::invalid_argument("simulation horizon T must be positive");
    }
    cfg.params.check();
    if (!(cfg.mag.gamma > 0.0) || !(cfg.nu_var_x > 0.0) || !(cfg.nu_var_y > 0.0)) {
        throw std::invalid_argument("magnitude rate and background variances must be positive");
    }
    const RetasParams& par = cfg.params;
    auto rng = make_rng(cfg.seed, cfg.replicate);
    std::gamma_distribution<double> wait(par.kappa, par.beta);
    std::normal_distribution<double> bx(cfg.nu_mean_x, std::sqrt(cfg.nu_var_x));
    std::normal_distribution<double> by(cfg.nu_mean_y, std::sqrt(cfg.nu_var_y));
    std::normal_distribution<double> ox(0.0, std::sqrt(par.sigma1_sq));
    std::normal_distribution<double> oy(0.0, std::sqrt(par.sigma2_sq));

    std::vector<RawEvent> raw;
    double t = 0.0;
    while (true) {
        t += wait(rng);
        if (t > cfg.T) {
            break;
        }
        raw.push_back({{t, bx(rng), by(rng), sample_magnitude(rng, cfg.mag)}, kExternalParent, 0});
        if (raw.size() > cfg.max_events) {
            throw NumericalError("main-shock count exceeds the event cap");
        }
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const RawEvent parent = raw[i];
        std::poisson_distribution<long> offspring(boost(parent.e.m, par, cfg.mag.m0));
        const long count = offspring(rng);
        for (long k = 0; k < count; ++k) {
            const double lag = sample_omori_lag(rng, par);
            const double dx = ox(rng);
            const double dy = oy(rng);
            const double m = sample_magnitude(rng, cfg.mag);
            const double tc = parent.e.t + lag;
            if (tc > cfg.T) {
                continue;
            }
            raw.push_back({{tc, parent.e.x + dx, parent.e.y + dy, m}, i, parent.generation + 1});
            if (raw.size() > cfg.max_events) {
                const auto prod = productivity(par, cfg.mag.gamma);
                throw NumericalError("runaway cascade: more than " + std::to_string(cfg.max_events) +
                                     " events (productivity " + std::to_string(prod.value) +
                                     (prod.supercritical ? ", supercritical)" : ")"));
            }
        }
    }

    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a].e.t < raw[b].e.t; });
    constexpr std::size_t kDropped = kExternalParent;
    std::vector<std::size_t> position(raw.size(), kDropped);
    SimulatedCatalog out;
    out.catalog.T = cfg.T;
    out.catalog.m0 = cfg.mag.m0;
    out.catalog.window = cfg.window;
    for (std::size_t idx : order) {
        const RawEvent& r = raw[idx];
        if (!cfg.window.is_whole_plane() && !cfg.window.contains(r.e.x, r.e.y)) {
            ++out.catalog.meta.dropped_outside_window;
            continue;
        }
        position[idx] = out.catalog.events.size();
        out.catalog.events.push_back(r.e);
        if (r.parent == kExternalParent) {
            out.labels.push_back(0);
        } else if (position[r.parent] == kDropped) {
            out.labels.push_back(kExternalParent);
        } else {
            out.labels.push_back(position[r.parent] + 1);
        }
        out.generation.push_back(r.generation);
    }
    separate_tied_times(out.catalog);
    return out;
}

SimConfig study_sim_config(double T, double kappa, double beta) {
    SimConfig cfg;
    cfg.params = RetasParams{kappa, beta, 1.2, 0.01, 0.01, 0.02, 0.5, 1.0};
    cfg.mag = MagnitudeParams{5.0, 0.0};
    cfg.nu_var_x = 0.05;
    cfg.nu_var_y = 0.10;
    cfg.T = T;
    return cfg;
}

} // namespace retas
