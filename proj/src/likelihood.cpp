#include "retas/likelihood.hpp"

#include "excitation_kernel.hpp"
#include "log_math.hpp"
#include "retas/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace retas {

using detail::kNegInf;
using detail::log_add;
using detail::log_sum_exp;

namespace {

// exp() of anything below this is zero in double precision.
constexpr double kUnderflow = -745.0;

std::vector<double> log_boosts(const Catalog& catalog, const RetasParams& params) {
    std::vector<double> lk(catalog.size());
    const double log_a = std::log(params.A);
    for (std::size_t j = 0; j < catalog.size(); ++j) {
        lk[j] = log_a + params.alpha * (catalog[j].m - catalog.m0);
    }
    return lk;
}

struct ResponseConstants {
    double log_norm; // log((p-1)/c) - log(2 pi) - 0.5 log(s1 s2)
    double inv_c;
    double half_inv_s1;
    double half_inv_s2;
};

ResponseConstants response_constants(const RetasParams& params) {
    return {std::log(params.p - 1.0) - std::log(params.c) - std::log(2.0 * std::numbers::pi) -
                0.5 * std::log(params.sigma1_sq * params.sigma2_sq),
            1.0 / params.c, 0.5 / params.sigma1_sq, 0.5 / params.sigma2_sq};
}

// log of sum_{j < upto} exp(lk_j + log g(t - t_j) + log f(x - x_j, y - y_j)).
double log_excitation_sum(double t, double x, double y, std::size_t upto, const Catalog& catalog,
                          const RetasParams& params, std::span<const double> lk, double lk_max,
                          const ResponseConstants& rc) {
    if (upto == 0) {
        return kNegInf;
    }
    const double shift = rc.log_norm + lk_max;
    double sum = 0.0;
    for (std::size_t j = 0; j < upto; ++j) {
        const Event& e = catalog[j];
        const double dx = x - e.x;
        const double dy = y - e.y;
        const double lf = -(dx * dx * rc.half_inv_s1 + dy * dy * rc.half_inv_s2);
        const double partial = lk[j] - lk_max + lf;
        if (partial < kUnderflow) {
            continue;
        }
        const double lg = -params.p * std::log1p((t - e.t) * rc.inv_c);
        sum += std::exp(partial + lg);
    }
    if (sum > 0.0) {
        return shift + std::log(sum);
    }
    // Every term underflowed relative to the bound; redo in log space.
    std::vector<double> terms(upto);
    for (std::size_t j = 0; j < upto; ++j) {
        const Event& e = catalog[j];
        const double dx = x - e.x;
        const double dy = y - e.y;
        terms[j] = lk[j] - (dx * dx * rc.half_inv_s1 + dy * dy * rc.half_inv_s2) -
                   params.p * std::log1p((t - e.t) * rc.inv_c);
    }
    return rc.log_norm + log_sum_exp(terms);
}

std::size_t count_before(const Catalog& catalog, double t) {
    std::size_t k = 0;
    while (k < catalog.size() && catalog[k].t < t) {
        ++k;
    }
    return k;
}

void check_inputs(const Catalog& catalog, const RetasParams& params, std::span<const double> log_nu) {
    if (catalog.empty()) {
        throw DataError("likelihood requires at least one event");
    }
    if (log_nu.size() != catalog.size()) {
        throw std::invalid_argument("background values do not match the catalog size");
    }
    params.check();
}

[[noreturn]] void fail_at(std::size_t index, const std::string& what) {
    throw NumericalError("non-finite " + what + " at event " + std::to_string(index));
}

} // namespace

// ---------------------------------------------------------------------------------------

BackgroundIntensity BackgroundIntensity::parametric(double mean_x, double mean_y, double var_x, double var_y) {
    if (!(var_x > 0.0) || !(var_y > 0.0)) {
        throw std::invalid_argument("parametric background variances must be positive");
    }
    return BackgroundIntensity(Parametric{mean_x, mean_y, var_x, var_y});
}

BackgroundIntensity BackgroundIntensity::kde(std::shared_ptr<const WeightedKde> estimate) {
    if (!estimate) {
        throw std::invalid_argument("null KDE background");
    }
    return BackgroundIntensity(std::move(estimate));
}

BackgroundIntensity BackgroundIntensity::constant(double level) {
    if (!(level >= 0.0) || !std::isfinite(level)) {
        throw std::invalid_argument("constant background must be finite and nonnegative");
    }
    return BackgroundIntensity(Constant{level});
}

BackgroundIntensity::Kind BackgroundIntensity::kind() const {
    switch (v_.index()) {
    case 0:
        return Kind::Parametric;
    case 1:
        return Kind::Kde;
    default:
        return Kind::Constant;
    }
}

const WeightedKde* BackgroundIntensity::as_kde() const {
    const auto* p = std::get_if<std::shared_ptr<const WeightedKde>>(&v_);
    return p ? p->get() : nullptr;
}

double BackgroundIntensity::evaluate(double x, double y) const {
    if (const auto* par = as_parametric()) {
        const double dx = x - par->mean_x;
        const double dy = y - par->mean_y;
        return std::exp(-0.5 * (dx * dx / par->var_x + dy * dy / par->var_y)) /
               (2.0 * std::numbers::pi * std::sqrt(par->var_x * par->var_y));
    }
    if (const auto* k = as_kde()) {
        return k->evaluate(x, y);
    }
    return as_constant()->level;
}

std::vector<double> BackgroundIntensity::log_at_events(const Catalog& catalog) const {
    std::vector<double> out(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        out[i] = std::log(evaluate(catalog[i].x, catalog[i].y));
    }
    return out;
}

double FilterState::p(std::size_t r, std::size_t j) const { return std::exp(log_p(r, j)); }

// ---------------------------------------------------------------------------------------

double excitation(double t, double x, double y, const Catalog& catalog, const RetasParams& params) {
    params.check();
    const std::size_t upto = count_before(catalog, t);
    if (upto == 0) {
        return 0.0;
    }
    const auto lk = log_boosts(catalog, params);
    double lk_max = kNegInf;
    for (std::size_t j = 0; j < upto; ++j) {
        lk_max = std::max(lk_max, lk[j]);
    }
    return std::exp(log_excitation_sum(t, x, y, upto, catalog, params, lk, lk_max, response_constants(params)));
}

ExcitationGeometry::ExcitationGeometry(const Catalog& catalog)
    : catalog_(&catalog), dt_(catalog.size()), dx2_(catalog.size()), dy2_(catalog.size()) {
    for (std::size_t r = 1; r < catalog.size(); ++r) {
        const Event& e = catalog[r];
        auto dt = dt_.row(r);
        auto dx2 = dx2_.row(r);
        auto dy2 = dy2_.row(r);
        for (std::size_t j = 0; j < r; ++j) {
            const double dx = e.x - catalog[j].x;
            const double dy = e.y - catalog[j].y;
            dt[j] = e.t - catalog[j].t;
            dx2[j] = dx * dx;
            dy2[j] = dy * dy;
        }
    }
}

std::vector<double> log_excitation_at_events(const Catalog& catalog, const RetasParams& params) {
    const ExcitationGeometry geometry(catalog);
    return log_excitation_at_events(geometry, params);
}

std::vector<double> log_excitation_at_events(const ExcitationGeometry& geometry, const RetasParams& params) {
    const Catalog& catalog = geometry.catalog();
    const std::size_t n = catalog.size();
    std::vector<double> out(n, kNegInf);
    if (n < 2) {
        return out;
    }
    const auto rc = response_constants(params);
    // Shift every boost by the largest one so each exponent in the row sum is <= 0.
    std::vector<double> lk(n);
    double lk_max = kNegInf;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        lk[j] = params.alpha * (catalog[j].m - catalog.m0);
        lk_max = std::max(lk_max, lk[j]);
    }
    for (double& v : lk) {
        v -= lk_max;
    }
    const double shift = rc.log_norm + std::log(params.A) + lk_max;
    std::vector<double> terms;
    for (std::size_t r = 1; r < n; ++r) {
        const auto dt = geometry.lags(r);
        const auto dx2 = geometry.dx2(r);
        const auto dy2 = geometry.dy2(r);
        const double s = detail::excitation_row_sum(lk.data(), dx2.data(), dy2.data(), dt.data(), r, rc.half_inv_s1,
                                                    rc.half_inv_s2, params.p, rc.inv_c);
        if (s > 0.0 && std::isfinite(s)) {
            out[r] = shift + std::log(s);
            continue;
        }
        // Every term underflowed; redo in log space.
        terms.resize(r);
        for (std::size_t j = 0; j < r; ++j) {
            terms[j] = lk[j] - dx2[j] * rc.half_inv_s1 - dy2[j] * rc.half_inv_s2 - params.p * std::log1p(dt[j] * rc.inv_c);
        }
        out[r] = shift + log_sum_exp(terms);
    }
    return out;
}

double excitation_compensator(double t, const Catalog& catalog, const RetasParams& params,
                              const SpatialWindow& window) {
    params.check();
    double total = 0.0;
    for (const Event& e : catalog.events) {
        if (!(e.t < t)) {
            break;
        }
        total += boost(e.m, params, catalog.m0) * omori_cdf(t - e.t, params) *
                 spatial_mass(e.x, e.y, window, params);
    }
    return total;
}

double excitation_compensator(double t, const Catalog& catalog, const RetasParams& params) {
    return excitation_compensator(t, catalog, params, catalog.window);
}

// ---------------------------------------------------------------------------------------

FilterState forward_filter(const Catalog& catalog, const RetasParams& params, const BackgroundIntensity& nu) {
    const auto log_nu = nu.log_at_events(catalog);
    return forward_filter(catalog, params, log_nu);
}

FilterState forward_filter(const Catalog& catalog, const RetasParams& params, std::span<const double> log_nu) {
    check_inputs(catalog, params, log_nu);
    const std::size_t n = catalog.size();
    const double kappa = params.kappa;
    const double beta = params.beta;
    const double log_beta = std::log(beta);

    FilterState st;
    st.n = n;
    st.log_p = TriangularArray<double>(n + 1, kNegInf);
    st.log_S = TriangularArray<double>(n + 1, kNegInf);
    st.log_mu = TriangularArray<double>(n, kNegInf);
    st.log_d = TriangularArray<double>(n, kNegInf);
    st.log_nu.assign(log_nu.begin(), log_nu.end());
    st.log_phi = log_excitation_at_events(catalog, params);
    st.Phi_T = excitation_compensator(catalog.T, catalog, params);

    const double t0 = catalog[0].t;
    if (!(t0 > 0.0)) {
        throw NumericalError("first event must occur strictly after the renewal origin (t > 0)");
    }
    const IncompleteGamma at_zero = incomplete_gamma(0.0, kappa);
    const IncompleteGamma first = incomplete_gamma(t0 / beta, kappa);
    st.log_d1 = first.log_ratio - log_beta + log_nu[0] - log_upper_gamma_drop(at_zero, first, kappa);
    if (!std::isfinite(st.log_d1)) {
        fail_at(0, "first-event density");
    }
    double loglik = st.log_d1;

    // prev[j] is the incomplete gamma at (t_{r-1} - t_j)/beta.
    std::vector<IncompleteGamma> prev{at_zero};
    std::vector<double> terms;
    st.log_p(1, 0) = 0.0;

    for (std::size_t r = 1; r <= n; ++r) {
        const bool last = (r == n);
        const double tr = last ? catalog.T : catalog[r].t;
        auto lp = st.log_p.row(r);
        auto lS = st.log_S.row(r);
        terms.assign(r, kNegInf);
        for (std::size_t j = 0; j < r; ++j) {
            const IncompleteGamma cur = incomplete_gamma((tr - catalog[j].t) / beta, kappa);
            lS[j] = -log_upper_gamma_drop(prev[j], cur, kappa);
            if (!last) {
                const double lmu = cur.log_ratio - log_beta;
                st.log_mu(r, j) = lmu;
                const double ld = log_add(lmu + log_nu[r], st.log_phi[r]) + lS[j];
                st.log_d(r, j) = ld;
                terms[j] = lp[j] + ld;
            } else {
                terms[j] = lp[j] + lS[j];
            }
            prev[j] = cur;
        }
        const double row_total = log_sum_exp(terms);
        if (!std::isfinite(row_total)) {
            fail_at(last ? n - 1 : r, last ? "survival term" : "event density");
        }
        loglik += row_total;
        if (last) {
            break;
        }
        // Propagate: event r is an aftershock (keeps j) or a main-shock (new index r).
        auto next = st.log_p.row(r + 1);
        for (std::size_t j = 0; j < r; ++j) {
            terms[j] = lp[j] + st.log_mu(r, j) + log_nu[r] + lS[j];
            next[j] = lp[j] + st.log_phi[r] + lS[j] - row_total;
        }
        next[r] = log_sum_exp(terms) - row_total;
        const double norm = log_sum_exp(next);
        if (!std::isfinite(norm)) {
            fail_at(r, "filter probability");
        }
        for (double& v : next) {
            v -= norm;
        }
        prev.push_back(at_zero);
    }
    loglik -= st.Phi_T;
    if (!std::isfinite(loglik)) {
        fail_at(n - 1, "log-likelihood");
    }
    st.loglik = loglik;
    return st;
}

double log_likelihood(const Catalog& catalog, const RetasParams& params, const BackgroundIntensity& nu) {
    const auto log_nu = nu.log_at_events(catalog);
    return log_likelihood(catalog, params, log_nu);
}

double log_likelihood(const Catalog& catalog, const RetasParams& params, std::span<const double> log_nu) {
    check_inputs(catalog, params, log_nu);
    const ExcitationGeometry geometry(catalog);
    return log_likelihood(geometry, params, log_nu);
}

double log_likelihood(const ExcitationGeometry& geometry, const RetasParams& params, std::span<const double> log_nu) {
    const Catalog& catalog = geometry.catalog();
    check_inputs(catalog, params, log_nu);
    const std::size_t n = catalog.size();
    const double kappa = params.kappa;
    const double beta = params.beta;
    const double log_beta = std::log(beta);
    const double t0 = catalog[0].t;
    if (!(t0 > 0.0)) {
        return kNegInf;
    }
    const auto log_phi = log_excitation_at_events(geometry, params);
    const double Phi_T = excitation_compensator(catalog.T, catalog, params);

    const IncompleteGamma at_zero = incomplete_gamma(0.0, kappa);
    const IncompleteGamma first = incomplete_gamma(t0 / beta, kappa);
    double loglik = first.log_ratio - log_beta + log_nu[0] - log_upper_gamma_drop(at_zero, first, kappa);
    if (!std::isfinite(loglik)) {
        return kNegInf;
    }

    // Active candidate set for the most recent main-shock, with their filter weights.
    std::vector<std::size_t> active{0};
    std::vector<double> lp{0.0};
    std::vector<IncompleteGamma> prev{at_zero};
    std::vector<double> lS, lmain, terms;
    std::vector<std::size_t> next_active;
    std::vector<double> next_lp;
    std::vector<IncompleteGamma> next_prev;

    for (std::size_t r = 1; r <= n; ++r) {
        const bool last = (r == n);
        const double tr = last ? catalog.T : catalog[r].t;
        const std::size_t m = active.size();
        lS.resize(m);
        lmain.resize(m);
        terms.resize(m);
        for (std::size_t a = 0; a < m; ++a) {
            const IncompleteGamma cur = incomplete_gamma((tr - catalog[active[a]].t) / beta, kappa);
            lS[a] = -log_upper_gamma_drop(prev[a], cur, kappa);
            if (!last) {
                lmain[a] = cur.log_ratio - log_beta + log_nu[r];
                terms[a] = lp[a] + log_add(lmain[a], log_phi[r]) + lS[a];
            } else {
                terms[a] = lp[a] + lS[a];
            }
            prev[a] = cur;
        }
        const double row_total = log_sum_exp(terms);
        if (!std::isfinite(row_total)) {
            return kNegInf;
        }
        loglik += row_total;
        if (last) {
            break;
        }
        next_active.clear();
        next_lp.clear();
        next_prev.clear();
        for (std::size_t a = 0; a < m; ++a) {
            terms[a] = lp[a] + lmain[a] + lS[a];
        }
        const double lp_main = log_sum_exp(terms) - row_total;
        double row_max = lp_main;
        for (std::size_t a = 0; a < m; ++a) {
            lp[a] = lp[a] + log_phi[r] + lS[a] - row_total;
            row_max = std::max(row_max, lp[a]);
        }
        const double cutoff = row_max - kPruneLogRatio;
        for (std::size_t a = 0; a < m; ++a) {
            if (lp[a] >= cutoff) {
                next_active.push_back(active[a]);
                next_lp.push_back(lp[a]);
                next_prev.push_back(prev[a]);
            }
        }
        if (lp_main >= cutoff) {
            next_active.push_back(r);
            next_lp.push_back(lp_main);
            next_prev.push_back(at_zero);
        }
        const double norm = log_sum_exp(next_lp);
        if (!std::isfinite(norm)) {
            return kNegInf;
        }
        for (double& v : next_lp) {
            v -= norm;
        }
        active.swap(next_active);
        lp.swap(next_lp);
        prev.swap(next_prev);
    }
    loglik -= Phi_T;
    return std::isfinite(loglik) ? loglik : kNegInf;
}

} // namespace retas
