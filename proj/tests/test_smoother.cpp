#include "doctest.h"

#include "fixtures.hpp"

#include "retas/likelihood.hpp"
#include "retas/oracle.hpp"
#include "retas/simulator.hpp"
#include "retas/smoother.hpp"

#include <cmath>
#include <random>

using namespace retas;
using retas::testing::random_fixture;

namespace {

DeclusterResult smoothed(const FilterState& st, const Catalog& c, const RetasParams& p) {
    const auto lf = backward_messages(st);
    const auto q = smooth_q(st, lf);
    return decluster_smoothed(st, lf, q, c, p);
}

double max_diff(const DeclusterResult& a, const DeclusterResult& b) {
    double worst = 0.0;
    for (std::size_t r = 1; r < a.size(); ++r) {
        worst = std::max(worst, std::fabs(a.omega[r] - b.omega[r]));
        for (std::size_t j = 0; j < r; ++j) {
            worst = std::max({worst, std::fabs(a.q(r, j) - b.q(r, j)), std::fabs(a.pi(r, j) - b.pi(r, j))});
        }
    }
    return worst;
}

} // namespace

TEST_CASE("two events by hand") {
    const RetasParams p{0.7, 1.3, 1.2, 0.02, 0.01, 0.02, 0.5, 1.0};
    const Catalog c = make_catalog({{0.4, 0.0, 0.0, 0.3}, {0.9, 0.05, -0.02, 0.1}}, 2.0, 0.0,
                                   SpatialWindow::whole_plane());
    const std::vector<double> log_nu{std::log(0.8), std::log(0.6)};
    const auto st = forward_filter(c, p, log_nu);
    const auto res = smoothed(st, c, p);
    CHECK(res.q(1, 0) == 1.0);
    CHECK(res.omega[0] == 1.0);

    // Branch B = 0: event 1 is a main-shock, renewal restarts at 0.9. Branch B = 1: it is an
    // aftershock, renewal runs on from 0.4 to T. Everything else is common to both.
    const double mu = renewal_hazard(0.5, p);
    const double phi = excitation(0.9, 0.05, -0.02, c, p);
    const double main = mu * 0.6 * std::exp(-renewal_hazard_integral(0.0, 0.5, p) -
                                            renewal_hazard_integral(0.0, 1.1, p));
    const double after = phi * std::exp(-renewal_hazard_integral(0.0, 1.6, p));
    CHECK(res.omega[1] == doctest::Approx(main / (main + after)).epsilon(1e-13));
    CHECK(res.pi(1, 0) == doctest::Approx(after / (main + after)).epsilon(1e-13));

    const auto filt = decluster_filtered(st, c, p);
    CHECK(filt.omega[1] == doctest::Approx(mu * 0.6 / (mu * 0.6 + phi)).epsilon(1e-13));
}

TEST_CASE("smoothed and filtered probabilities agree with enumeration") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 24; ++rep) {
        const auto fx = random_fixture(rng, 2 + rep % 7, rep);
        const auto st = forward_filter(fx.catalog, fx.params, fx.log_nu);
        const auto s = smoothed(st, fx.catalog, fx.params);
        const auto f = decluster_filtered(st, fx.catalog, fx.params);
        CHECK(max_diff(s, oracle::brute_force_decluster(fx.catalog, fx.params, fx.log_nu)) < 1e-10);
        CHECK(max_diff(f, oracle::brute_force_filtered(fx.catalog, fx.params, fx.log_nu)) < 1e-10);
    }
}

TEST_CASE("normalisation in both modes") {
    auto cfg = study_sim_config(80.0, 0.3, 3.0);
    cfg.seed = 12;
    const auto sim = simulate_catalog(cfg);
    const auto log_nu = BackgroundIntensity::parametric(0, 0, 0.05, 0.10).log_at_events(sim.catalog);
    const auto st = forward_filter(sim.catalog, cfg.params, log_nu);
    for (const auto& res : {smoothed(st, sim.catalog, cfg.params), decluster_filtered(st, sim.catalog, cfg.params)}) {
        for (std::size_t r = 1; r < res.size(); ++r) {
            double qs = 0.0, total = res.omega[r];
            for (std::size_t j = 0; j < r; ++j) {
                qs += res.q(r, j);
                total += res.pi(r, j);
                CHECK(res.pi(r, j) >= 0.0);
                CHECK(res.pi(r, j) <= 1.0 + 1e-15);
            }
            CHECK(std::fabs(qs - 1.0) < 1e-10);
            CHECK(std::fabs(total - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("exponential renewal makes smoothing equal filtering") {
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 6; ++rep) {
        auto fx = random_fixture(rng, 5 + 7 * rep, rep);
        fx.params.kappa = 1.0;
        const auto st = forward_filter(fx.catalog, fx.params, fx.log_nu);
        const auto s = smoothed(st, fx.catalog, fx.params);
        const auto f = decluster_filtered(st, fx.catalog, fx.params);
        CHECK(max_diff(s, f) < 1e-10);
        for (std::size_t r = 1; r < s.size(); ++r) {
            for (std::size_t j = 0; j < r; ++j) {
                CHECK(std::fabs(s.q(r, j) - st.p(r, j)) < 1e-10);
            }
        }
    }
}

TEST_CASE("row scaling of backward messages leaves the posteriors unchanged") {
    std::mt19937_64 rng(47);
    const auto fx = random_fixture(rng, 30, 0);
    const auto st = forward_filter(fx.catalog, fx.params, fx.log_nu);
    const auto lf = backward_messages(st);
    auto scaled = lf;
    for (std::size_t r = 1; r < scaled.rows(); ++r) {
        for (auto& v : scaled.row(r)) {
            v += 3.0 * static_cast<double>(r) - 40.0;
        }
    }
    const auto a = decluster_smoothed(st, lf, smooth_q(st, lf), fx.catalog, fx.params);
    const auto b = decluster_smoothed(st, scaled, smooth_q(st, scaled), fx.catalog, fx.params);
    CHECK(max_diff(a, b) < 1e-14);
}

TEST_CASE("negligible excitation makes every event a main-shock") {
    std::mt19937_64 rng(53);
    auto fx = random_fixture(rng, 12, 1);
    fx.params.A = 1e-12;
    const auto st = forward_filter(fx.catalog, fx.params, fx.log_nu);
    const auto res = smoothed(st, fx.catalog, fx.params);
    for (std::size_t r = 0; r < res.size(); ++r) {
        CHECK(res.omega[r] > 1.0 - 1e-9);
    }
}

TEST_CASE("most probable labels and tie-breaking") {
    DeclusterResult r;
    r.omega = {1.0, 0.5, 0.9, 0.2, 0.3};
    r.pi = TriangularArray<double>(5);
    r.pi(1, 0) = 0.5;
    r.pi(2, 0) = 0.05;
    r.pi(2, 1) = 0.05;
    r.pi(3, 0) = 0.4;
    r.pi(3, 1) = 0.4;
    r.pi(3, 2) = 0.0;
    r.pi(4, 0) = 0.1;
    r.pi(4, 2) = 0.6;
    const auto labels = most_probable_labels(r);
    CHECK(labels[0] == 0);
    CHECK(labels[1] == 0);
    CHECK(labels[2] == 0);
    CHECK(labels[3] == 1);
    CHECK(labels[4] == 3);
}
