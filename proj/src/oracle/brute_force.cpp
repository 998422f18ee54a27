#include "retas/oracle.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace retas::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Model {
    const Catalog& cat;
    const RetasParams& par;
    std::span<const double> log_nu;

    // Cumulative renewal hazard over a gap of length t.
    double cum_hazard(double t) const { return -std::log(boost::math::gamma_q(par.kappa, t / par.beta)); }

    double log_hazard(double t) const {
        const double x = t / par.beta;
        return std::log(boost::math::gamma_p_derivative(par.kappa, x)) - std::log(par.beta) -
               std::log(boost::math::gamma_q(par.kappa, x));
    }

    double log_psi(std::size_t i, std::size_t j) const {
        const Event& a = cat[i];
        const Event& b = cat[j];
        const double dt = a.t - b.t;
        const double dx = a.x - b.x;
        const double dy = a.y - b.y;
        const double k = par.A * std::exp(par.alpha * (b.m - cat.m0));
        const double g = (par.p - 1.0) / par.c * std::pow(1.0 + dt / par.c, -par.p);
        const double f = std::exp(-0.5 * (dx * dx / par.sigma1_sq + dy * dy / par.sigma2_sq)) /
                         (2.0 * std::numbers::pi * std::sqrt(par.sigma1_sq * par.sigma2_sq));
        return std::log(k * g * f);
    }

    double compensator(double t) const {
        double total = 0.0;
        const boost::math::normal_distribution<double> z;
        for (const Event& e : cat.events) {
            if (!(e.t < t)) {
                break;
            }
            const double k = par.A * std::exp(par.alpha * (e.m - cat.m0));
            const double G = 1.0 - std::pow(1.0 + (t - e.t) / par.c, 1.0 - par.p);
            double mass = 1.0;
            if (!cat.window.is_whole_plane()) {
                const double s1 = std::sqrt(par.sigma1_sq);
                const double s2 = std::sqrt(par.sigma2_sq);
                const auto& w = cat.window;
                mass = (boost::math::cdf(z, (w.x_max - e.x) / s1) - boost::math::cdf(z, (w.x_min - e.x) / s1)) *
                       (boost::math::cdf(z, (w.y_max - e.y) / s2) - boost::math::cdf(z, (w.y_min - e.y) / s2));
            }
            total += k * G * mass;
        }
        return total;
    }

    // Density of events 0..m-1 under labels b, with the main-shock process surviving to `until`.
    // The aftershock compensator is left out.
    double log_prefix_density(const std::vector<std::size_t>& b, std::size_t m, double until) const {
        double lp = 0.0;
        double prev = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (b[i] == 0) {
                const double gap = cat[i].t - prev;
                lp += log_hazard(gap) + log_nu[i] - cum_hazard(gap);
                prev = cat[i].t;
            } else {
                lp += log_psi(i, b[i] - 1);
            }
        }
        return lp - cum_hazard(until - prev);
    }
};

// Calls visit(b) for every branching vector of length m (b[0] = 0, b[i] in 0..i).
void enumerate(std::size_t m, const std::function<void(const std::vector<std::size_t>&)>& visit) {
    std::vector<std::size_t> b(m, 0);
    if (m == 0) {
        return;
    }
    while (true) {
        visit(b);
        std::size_t i = 1;
        while (i < m) {
            if (b[i] < i) {
                ++b[i];
                break;
            }
            b[i] = 0;
            ++i;
        }
        if (i >= m) {
            return;
        }
    }
}

double log_sum(const std::vector<double>& v) {
    double mx = kNegInf;
    for (double x : v) {
        mx = std::max(mx, x);
    }
    if (!std::isfinite(mx)) {
        return mx;
    }
    double s = 0.0;
    for (double x : v) {
        s += std::exp(x - mx);
    }
    return mx + std::log(s);
}

std::size_t last_main_before(const std::vector<std::size_t>& b, std::size_t r) {
    std::size_t last = 0;
    for (std::size_t i = 0; i < r; ++i) {
        if (b[i] == 0) {
            last = i;
        }
    }
    return last;
}

DeclusterResult blank(std::size_t n, DeclusterMode mode) {
    DeclusterResult res;
    res.mode = mode;
    res.q = TriangularArray<double>(n, 0.0);
    res.omega_ij = TriangularArray<double>(n, 0.0);
    res.pi = TriangularArray<double>(n, 0.0);
    res.omega.assign(n, 0.0);
    res.omega[0] = 1.0;
    return res;
}

void check(const Catalog& cat, std::span<const double> log_nu, std::size_t max_n) {
    if (cat.empty() || cat.size() > max_n) {
        throw std::invalid_argument("enumeration oracle supports 1.." + std::to_string(max_n) + " events");
    }
    if (log_nu.size() != cat.size()) {
        throw std::invalid_argument("background values do not match the catalog size");
    }
}

} // namespace

double brute_force_loglik(const Catalog& catalog, const RetasParams& params, std::span<const double> log_nu) {
    check(catalog, log_nu, 10);
    const Model model{catalog, params, log_nu};
    const std::size_t n = catalog.size();
    std::vector<double> terms;
    enumerate(n, [&](const std::vector<std::size_t>& b) {
        terms.push_back(model.log_prefix_density(b, n, catalog.T));
    });
    return log_sum(terms) - model.compensator(catalog.T);
}

DeclusterResult brute_force_decluster(const Catalog& catalog, const RetasParams& params,
                                      std::span<const double> log_nu) {
    check(catalog, log_nu, 8);
    const Model model{catalog, params, log_nu};
    const std::size_t n = catalog.size();
    std::vector<std::vector<std::size_t>> vectors;
    std::vector<double> logw;
    enumerate(n, [&](const std::vector<std::size_t>& b) {
        vectors.push_back(b);
        logw.push_back(model.log_prefix_density(b, n, catalog.T));
    });
    const double norm = log_sum(logw);
    DeclusterResult res = blank(n, DeclusterMode::Smoothed);
    for (std::size_t v = 0; v < vectors.size(); ++v) {
        const auto& b = vectors[v];
        const double w = std::exp(logw[v] - norm);
        for (std::size_t r = 1; r < n; ++r) {
            const std::size_t last = last_main_before(b, r);
            res.q(r, last) += w;
            if (b[r] == 0) {
                res.omega[r] += w;
                res.omega_ij(r, last) += w;
            } else {
                res.pi(r, b[r] - 1) += w;
            }
        }
    }
    return res;
}

DeclusterResult brute_force_filtered(const Catalog& catalog, const RetasParams& params,
                                     std::span<const double> log_nu) {
    check(catalog, log_nu, 8);
    const Model model{catalog, params, log_nu};
    const std::size_t n = catalog.size();
    DeclusterResult res = blank(n, DeclusterMode::Filtered);
    for (std::size_t r = 1; r < n; ++r) {
        std::vector<double> logw;
        std::vector<std::size_t> last;
        enumerate(r, [&](const std::vector<std::size_t>& b) {
            logw.push_back(model.log_prefix_density(b, r, catalog[r - 1].t));
            last.push_back(last_main_before(b, r));
        });
        const double norm = log_sum(logw);
        std::vector<double> p(r, 0.0);
        for (std::size_t v = 0; v < logw.size(); ++v) {
            p[last[v]] += std::exp(logw[v] - norm);
        }
        std::vector<double> psi(r);
        double phi = 0.0;
        for (std::size_t j = 0; j < r; ++j) {
            psi[j] = std::exp(model.log_psi(r, j));
            phi += psi[j];
        }
        const double nu = std::exp(log_nu[r]);
        for (std::size_t k = 0; k < r; ++k) {
            const double main = std::exp(model.log_hazard(catalog[r].t - catalog[k].t)) * nu;
            res.q(r, k) = p[k];
            res.omega_ij(r, k) = p[k] * main / (main + phi);
            res.omega[r] += res.omega_ij(r, k);
            for (std::size_t j = 0; j < r; ++j) {
                res.pi(r, j) += p[k] * psi[j] / (main + phi);
            }
        }
    }
    return res;
}

} // namespace retas::oracle
