#pragma once

#include "retas/catalog.hpp"
#include "retas/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace retas::testing {

struct Fixture {
    Catalog catalog;
    RetasParams params;
    std::vector<double> log_nu;
};

/// Small random catalog with random parameters. Shapes cycle through 0.2, 1 and 5 and the
/// window alternates between the whole plane and a rectangle.
inline Fixture random_fixture(std::mt19937_64& rng, std::size_t n, int variant) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double shapes[3] = {0.2, 1.0, 5.0};
    Fixture fx;
    fx.params = RetasParams{shapes[variant % 3],      0.5 + U(rng),          1.1 + U(rng),
                            0.01 + 0.1 * U(rng),      0.05 + 0.2 * U(rng),   0.05 + 0.2 * U(rng),
                            0.2 + 0.6 * U(rng),       U(rng)};
    std::vector<Event> ev;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t += 0.05 + U(rng);
        ev.push_back({t, U(rng), U(rng), 2.0 * U(rng)});
    }
    const SpatialWindow w =
        variant % 2 ? SpatialWindow::rectangle(-0.2, 1.2, -0.1, 1.1) : SpatialWindow::whole_plane();
    fx.catalog = make_catalog(ev, t + U(rng), 0.0, w);
    fx.log_nu.resize(n);
    for (auto& v : fx.log_nu) {
        v = std::log(0.2 + U(rng));
    }
    return fx;
}

/// Constant-background ETAS log-likelihood written out term by term: background rate
/// nu_i / beta, excitation summed over all earlier events, compensator T / beta + Phi(T).
inline double direct_etas_loglik(const Catalog& cat, const RetasParams& p, const std::vector<double>& log_nu) {
    auto g = [&](double dt) { return (p.p - 1.0) / p.c * std::pow(1.0 + dt / p.c, -p.p); };
    auto G = [&](double dt) { return 1.0 - std::pow(1.0 + dt / p.c, 1.0 - p.p); };
    auto f = [&](double dx, double dy) {
        return std::exp(-0.5 * (dx * dx / p.sigma1_sq + dy * dy / p.sigma2_sq)) /
               (2.0 * std::numbers::pi * std::sqrt(p.sigma1_sq * p.sigma2_sq));
    };
    auto k = [&](double m) { return p.A * std::exp(p.alpha * (m - cat.m0)); };
    auto mass = [&](double cx, double cy) {
        if (cat.window.is_whole_plane()) {
            return 1.0;
        }
        auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
        const double sx = std::sqrt(p.sigma1_sq), sy = std::sqrt(p.sigma2_sq);
        return (Phi((cat.window.x_max - cx) / sx) - Phi((cat.window.x_min - cx) / sx)) *
               (Phi((cat.window.y_max - cy) / sy) - Phi((cat.window.y_min - cy) / sy));
    };
    double ll = 0.0;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        double phi = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            phi += g(cat[i].t - cat[j].t) * f(cat[i].x - cat[j].x, cat[i].y - cat[j].y) * k(cat[j].m);
        }
        ll += std::log(std::exp(log_nu[i]) / p.beta + phi);
    }
    ll -= cat.T / p.beta;
    for (std::size_t j = 0; j < cat.size(); ++j) {
        ll -= k(cat[j].m) * G(cat.T - cat[j].t) * mass(cat[j].x, cat[j].y);
    }
    return ll;
}

} // namespace retas::testing
