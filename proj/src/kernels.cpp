#include "retas/kernels.hpp"

#include "retas/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace retas {

namespace {

constexpr double kEps = 1e-16;
constexpr double kCfEps = 4.0 * std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;
constexpr double kAsymptoticX = 1e8;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower regularized series: returns log of sum s.t. gamma_lower(k, x) = exp(-x + k ln x) * sum.
double log_lower_series(double x, double k) {
    double ap = k;
    double del = 1.0 / k;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) {
            return std::log(sum);
        }
    }
    throw NumericalError("incomplete gamma series failed to converge");
}

// Asymptotic series for x much larger than k: Gamma(x, k) = exp(-x + k ln x) * h with
// h = (1/x) * sum (k-1)(k-2)...(k-n) / x^n.
double log_upper_asymptotic(double x, double k) {
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n < 60; ++n) {
        term *= (k - n) / x;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) {
            break;
        }
    }
    return std::log(sum) - std::log(x);
}

// Modified Lentz continued fraction: Gamma(x, k) = exp(-x + k ln x) * h.
double log_upper_cf(double x, double k) {
    double b = x + 1.0 - k;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - k);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = b + an / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kCfEps) {
            return std::log(h);
        }
    }
    throw NumericalError("incomplete gamma continued fraction failed to converge");
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::domain_error(std::string(name) + " must be positive and finite");
    }
}

} // namespace

bool RetasParams::is_valid() const {
    const auto v = to_array();
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return kappa > 0.0 && beta > 0.0 && p > 1.0 && c > 0.0 && sigma1_sq > 0.0 && sigma2_sq > 0.0 &&
           A > 0.0;
}

void RetasParams::check() const {
    require_positive(kappa, "kappa");
    require_positive(beta, "beta");
    if (!(p > 1.0) || !std::isfinite(p)) {
        throw std::domain_error("p must exceed 1");
    }
    require_positive(c, "c");
    require_positive(sigma1_sq, "sigma1_sq");
    require_positive(sigma2_sq, "sigma2_sq");
    require_positive(A, "A");
    if (!std::isfinite(alpha)) {
        throw std::domain_error("alpha must be finite");
    }
}

IncompleteGamma incomplete_gamma(double x, double k) {
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw std::domain_error("incomplete gamma requires shape k > 0");
    }
    if (!(x >= 0.0)) {
        throw std::domain_error("incomplete gamma requires x >= 0");
    }
    IncompleteGamma r;
    r.x = x;
    if (x == 0.0) {
        r.log_upper = std::lgamma(k);
        r.log_ratio = k < 1.0 ? kInf : (k == 1.0 ? 0.0 : -kInf);
        return r;
    }
    if (std::isinf(x)) {
        r.log_upper = -kInf;
        r.log_ratio = 0.0;
        return r;
    }
    if (k == 1.0) {
        r.log_upper = -x;
        r.log_ratio = 0.0;
        return r;
    }
    const double log_x = std::log(x);
    if (x < k + 1.0) {
        const double lg = std::lgamma(k);
        const double log_p = -x + k * log_x - lg + log_lower_series(x, k);
        r.log_upper = lg + std::log1p(-std::exp(log_p));
        r.log_ratio = (k - 1.0) * log_x - x - r.log_upper;
    } else {
        r.log_cf = x > kAsymptoticX && x > 1e4 * k ? log_upper_asymptotic(x, k) : log_upper_cf(x, k);
        r.continued_fraction = true;
        r.log_upper = -x + k * log_x + r.log_cf;
        r.log_ratio = -log_x - r.log_cf;
    }
    return r;
}

double log_upper_incomplete_gamma(double x, double k) { return incomplete_gamma(x, k).log_upper; }

double upper_incomplete_gamma(double x, double k) { return std::exp(log_upper_incomplete_gamma(x, k)); }

double log_upper_gamma_drop(const IncompleteGamma& a, const IncompleteGamma& b, double k) {
    if (a.continued_fraction && b.continued_fraction) {
        const double dx = b.x - a.x;
        return dx - k * std::log1p(dx / a.x) - (b.log_cf - a.log_cf);
    }
    if (std::isinf(b.log_upper)) {
        return kInf;
    }
    return a.log_upper - b.log_upper;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_interval_probability(double a, double b) {
    if (!(a < b)) {
        return 0.0;
    }
    if (a >= 0.0) {
        // Both upper-tail: use survival functions.
        return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
    }
    if (b <= 0.0) {
        return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
    }
    return 1.0 - 0.5 * std::erfc(-a / std::numbers::sqrt2) - 0.5 * std::erfc(b / std::numbers::sqrt2);
}

double renewal_log_hazard(double t, const RetasParams& params) {
    if (!(t > 0.0)) {
        throw std::domain_error("renewal hazard requires t > 0");
    }
    require_positive(params.kappa, "kappa");
    require_positive(params.beta, "beta");
    return incomplete_gamma(t / params.beta, params.kappa).log_ratio - std::log(params.beta);
}

double renewal_hazard(double t, const RetasParams& params) { return std::exp(renewal_log_hazard(t, params)); }

double renewal_hazard_integral(double a, double b, const RetasParams& params) {
    if (!(a >= 0.0) || !(a <= b)) {
        throw std::domain_error("renewal hazard integral requires 0 <= a <= b");
    }
    require_positive(params.kappa, "kappa");
    require_positive(params.beta, "beta");
    if (a == b) {
        return 0.0;
    }
    const auto ga = incomplete_gamma(a / params.beta, params.kappa);
    const auto gb = incomplete_gamma(b / params.beta, params.kappa);
    return log_upper_gamma_drop(ga, gb, params.kappa);
}

namespace {

void check_omori(const RetasParams& params) {
    if (!(params.p > 1.0)) {
        throw std::domain_error("Omori law requires p > 1");
    }
    require_positive(params.c, "c");
}

} // namespace

double omori_log_density(double t, const RetasParams& params) {
    check_omori(params);
    if (!(t > 0.0)) {
        throw std::domain_error("Omori density requires t > 0");
    }
    return std::log(params.p - 1.0) - std::log(params.c) - params.p * std::log1p(t / params.c);
}

double omori_density(double t, const RetasParams& params) { return std::exp(omori_log_density(t, params)); }

double omori_cdf(double t, const RetasParams& params) {
    check_omori(params);
    if (!(t >= 0.0)) {
        throw std::domain_error("Omori CDF requires t >= 0");
    }
    if (std::isinf(t)) {
        return 1.0;
    }
    return -std::expm1((1.0 - params.p) * std::log1p(t / params.c));
}

double spatial_log_density(double dx, double dy, const RetasParams& params) {
    require_positive(params.sigma1_sq, "sigma1_sq");
    require_positive(params.sigma2_sq, "sigma2_sq");
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(params.sigma1_sq * params.sigma2_sq) -
           0.5 * (dx * dx / params.sigma1_sq + dy * dy / params.sigma2_sq);
}

double spatial_density(double dx, double dy, const RetasParams& params) {
    return std::exp(spatial_log_density(dx, dy, params));
}

double spatial_mass(double cx, double cy, const SpatialWindow& window, const RetasParams& params) {
    require_positive(params.sigma1_sq, "sigma1_sq");
    require_positive(params.sigma2_sq, "sigma2_sq");
    if (window.is_whole_plane()) {
        return 1.0;
    }
    const double s1 = std::sqrt(params.sigma1_sq);
    const double s2 = std::sqrt(params.sigma2_sq);
    const double px = normal_interval_probability((window.x_min - cx) / s1, (window.x_max - cx) / s1);
    const double py = normal_interval_probability((window.y_min - cy) / s2, (window.y_max - cy) / s2);
    return px * py;
}

double boost(double m, const RetasParams& params, double m0) {
    if (!(m >= m0)) {
        throw std::domain_error("boost requires m >= m0");
    }
    return params.A * std::exp(params.alpha * (m - m0));
}

double magnitude_density(double m, const MagnitudeParams& mag) {
    require_positive(mag.gamma, "gamma");
    if (m < mag.m0) {
        return 0.0;
    }
    return mag.gamma * std::exp(-mag.gamma * (m - mag.m0));
}

double magnitude_loglik(const Catalog& catalog, const MagnitudeParams& mag) {
    require_positive(mag.gamma, "gamma");
    if (catalog.empty()) {
        throw DataError("magnitude log-likelihood of an empty catalog");
    }
    double excess = 0.0;
    for (const Event& e : catalog.events) {
        if (e.m < mag.m0) {
            return -kInf;
        }
        excess += e.m - mag.m0;
    }
    return static_cast<double>(catalog.size()) * std::log(mag.gamma) - mag.gamma * excess;
}

MagnitudeParams magnitude_mle(const Catalog& catalog) {
    if (catalog.empty()) {
        throw DataError("magnitude MLE of an empty catalog");
    }
    double excess = 0.0;
    for (const Event& e : catalog.events) {
        excess += e.m - catalog.m0;
    }
    if (!(excess > 0.0)) {
        throw DataError("magnitude MLE is degenerate: every magnitude equals m0");
    }
    return {static_cast<double>(catalog.size()) / excess, catalog.m0};
}

Productivity productivity(const RetasParams& params, double gamma) {
    if (!(gamma > params.alpha)) {
        return {kInf, true};
    }
    const double v = params.A * gamma / (gamma - params.alpha);
    return {v, v >= 1.0};
}

} // namespace retas
