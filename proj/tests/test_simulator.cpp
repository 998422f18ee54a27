#include "doctest.h"

#include "retas/errors.hpp"
#include "retas/estimation.hpp"
#include "retas/likelihood.hpp"
#include "retas/simulator.hpp"

#include <boost/math/distributions/gamma.hpp>

#include <algorithm>
#include <cmath>

using namespace retas;

namespace {

double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = cdf(x[i]);
        d = std::max({d, std::fabs(F - static_cast<double>(i) / n), std::fabs(static_cast<double>(i + 1) / n - F)});
    }
    return d;
}

} // namespace

TEST_CASE("simulation is reproducible per seed and replicate") {
    auto cfg = study_sim_config(100.0);
    cfg.seed = 11;
    cfg.replicate = 4;
    const auto a = simulate_catalog(cfg);
    const auto b = simulate_catalog(cfg);
    REQUIRE(a.catalog.size() == b.catalog.size());
    for (std::size_t i = 0; i < a.catalog.size(); ++i) {
        CHECK(a.catalog[i].t == b.catalog[i].t);
        CHECK(a.catalog[i].x == b.catalog[i].x);
        CHECK(a.catalog[i].m == b.catalog[i].m);
    }
    CHECK(a.labels == b.labels);
    cfg.replicate = 5;
    const auto c = simulate_catalog(cfg);
    CHECK((c.catalog.size() != a.catalog.size() || c.catalog[0].t != a.catalog[0].t));
}

TEST_CASE("labels and generations are consistent") {
    auto cfg = study_sim_config(200.0);
    cfg.seed = 2;
    const auto s = simulate_catalog(cfg);
    REQUIRE(s.labels.size() == s.catalog.size());
    CHECK(s.labels[0] == 0);
    std::size_t main = 0;
    for (std::size_t i = 0; i < s.catalog.size(); ++i) {
        if (i > 0) {
            CHECK(s.catalog[i].t >= s.catalog[i - 1].t);
        }
        CHECK(s.catalog[i].m >= cfg.mag.m0);
        CHECK(s.catalog[i].t <= cfg.T);
        if (s.labels[i] == 0) {
            CHECK(s.generation[i] == 0);
            ++main;
        } else {
            REQUIRE(s.labels[i] != kExternalParent);
            const std::size_t parent = s.labels[i] - 1;
            CHECK(parent < i);
            CHECK(s.generation[i] == s.generation[parent] + 1);
        }
    }
    CHECK(main > 0);
    CHECK(main < s.catalog.size());
}

TEST_CASE("weak triggering leaves a gamma renewal process") {
    auto cfg = study_sim_config(3000.0, 0.5, 2.0);
    cfg.params.A = 1e-9;
    cfg.seed = 9;
    const auto s = simulate_catalog(cfg);
    std::vector<double> gaps;
    for (std::size_t i = 0; i < s.catalog.size(); ++i) {
        CHECK(s.labels[i] == 0);
        if (i > 0) {
            gaps.push_back(s.catalog[i].t - s.catalog[i - 1].t);
        }
    }
    const boost::math::gamma_distribution<double> G(0.5, 2.0);
    const double d = ks_statistic(gaps, [&](double x) { return boost::math::cdf(G, x); });
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(gaps.size())));
    // Event count: T / (kappa beta) main-shocks on average.
    CHECK(static_cast<double>(s.catalog.size()) == doctest::Approx(3000.0).epsilon(0.08));
}

TEST_CASE("offspring counts match the truncated productivity") {
    double observed = 0.0, expected = 0.0, var = 0.0;
    for (std::uint64_t r = 0; r < 200; ++r) {
        auto cfg = study_sim_config(100.0);
        cfg.seed = 31;
        cfg.replicate = r;
        const auto s = simulate_catalog(cfg);
        const auto& p = cfg.params;
        for (std::size_t i = 0; i < s.catalog.size(); ++i) {
            const double mu = p.A * std::exp(p.alpha * (s.catalog[i].m - cfg.mag.m0)) *
                              (1.0 - std::pow(1.0 + (cfg.T - s.catalog[i].t) / p.c, 1.0 - p.p));
            expected += mu;
            var += mu;
            observed += s.labels[i] != 0 ? 1.0 : 0.0;
        }
    }
    CHECK(std::fabs(observed - expected) < 4.0 * std::sqrt(var));
    CHECK(productivity(study_sim_config(1.0).params, 5.0).value == doctest::Approx(0.625));
}

TEST_CASE("component samplers") {
    auto rng = make_rng(5, 0);
    const RetasParams p = study_sim_config(1.0).params;
    std::vector<double> lags(100000);
    for (auto& v : lags) {
        v = sample_omori_lag(rng, p);
        REQUIRE(v > 0.0);
    }
    const double d = ks_statistic(lags, [&](double t) { return 1.0 - std::pow(1.0 + t / p.c, 1.0 - p.p); });
    CHECK(d < 0.01);
    const MagnitudeParams mag{5.0, 2.0};
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double m = sample_magnitude(rng, mag);
        REQUIRE(m >= 2.0);
        sum += m - 2.0;
    }
    CHECK(std::fabs(sum / n - 0.2) < 0.005);
}

TEST_CASE("invalid or explosive settings are refused") {
    auto cfg = study_sim_config(50.0);
    cfg.T = 0.0;
    CHECK_THROWS_AS((void)simulate_catalog(cfg), std::invalid_argument);
    cfg = study_sim_config(500.0);
    cfg.params.A = 2.0;
    cfg.max_events = 20000;
    CHECK_THROWS_AS((void)simulate_catalog(cfg), NumericalError);
    cfg = study_sim_config(50.0);
    cfg.mag.gamma = 0.0;
    CHECK_THROWS_AS((void)simulate_catalog(cfg), std::invalid_argument);
}

TEST_CASE("window drops events and flags orphaned offspring") {
    auto cfg = study_sim_config(300.0);
    cfg.seed = 77;
    cfg.window = SpatialWindow::rectangle(-0.2, 0.2, -0.3, 0.3);
    const auto s = simulate_catalog(cfg);
    CHECK(s.catalog.meta.dropped_outside_window > 0);
    for (std::size_t i = 0; i < s.catalog.size(); ++i) {
        CHECK(cfg.window.contains(s.catalog[i].x, s.catalog[i].y));
        if (s.labels[i] != 0 && s.labels[i] != kExternalParent) {
            CHECK(s.labels[i] - 1 < i);
        }
    }
}

TEST_CASE("tiny renewal shapes give strictly increasing times") {
    auto cfg = study_sim_config(250.0, 0.05, 20.0);
    std::size_t moved = 0;
    for (std::uint64_t r = 0; r < 5; ++r) {
        cfg.replicate = r;
        const auto s = simulate_catalog(cfg);
        for (std::size_t i = 1; i < s.catalog.size(); ++i) {
            REQUIRE(s.catalog[i].t > s.catalog[i - 1].t);
        }
        moved += s.catalog.meta.ties_broken;
        const auto log_nu = BackgroundIntensity::parametric(0, 0, 0.05, 0.10).log_at_events(s.catalog);
        CHECK(std::isfinite(log_likelihood(s.catalog, cfg.params, log_nu)));
    }
    CHECK(moved > 0);
}
