#pragma once

#include "retas/catalog.hpp"

#include <array>
#include <cstddef>
#include <string_view>

namespace retas {

/// Intensity parameters of the renewal ETAS model.
///
/// Main-shock waiting times are gamma(kappa, beta); aftershocks follow a modified Omori
/// law in time (p, c), an axis-aligned Gaussian in space (sigma1_sq, sigma2_sq) and an
/// exponential boost A*exp(alpha*(m-m0)) in expected offspring count.
struct RetasParams {
    double kappa = 1.0;
    double beta = 1.0;
    double p = 1.2;
    double c = 0.01;
    double sigma1_sq = 0.01;
    double sigma2_sq = 0.01;
    double A = 0.5;
    double alpha = 1.0;

    static constexpr std::size_t kCount = 8;
    static constexpr std::array<std::string_view, kCount> kNames = {
        "kappa", "beta", "p", "c", "sigma1_sq", "sigma2_sq", "A", "alpha"};

    [[nodiscard]] std::array<double, kCount> to_array() const {
        return {kappa, beta, p, c, sigma1_sq, sigma2_sq, A, alpha};
    }
    static RetasParams from_array(const std::array<double, kCount>& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
    }

    /// True when every positivity constraint holds (kappa, beta, c, variances, A > 0; p > 1;
    /// all finite).
    [[nodiscard]] bool is_valid() const;
    /// Throws std::domain_error naming the first violated constraint.
    void check() const;

    friend bool operator==(const RetasParams&, const RetasParams&) = default;
};

/// Shifted-exponential (Gutenberg-Richter) magnitude law J(m) = gamma*exp(-gamma*(m-m0)).
struct MagnitudeParams {
    double gamma = 1.0; ///< rate; the mean excess magnitude is 1/gamma
    double m0 = 0.0;
};

// ---------------------------------------------------------------------------------------
// Special functions

/// log Gamma(x, k), the upper incomplete gamma integral of s^(k-1) e^(-s) over [x, inf).
/// Series below x = k+1, Lentz continued fraction above. Throws std::domain_error when
/// k <= 0 or x < 0.
double log_upper_incomplete_gamma(double x, double k);

/// Gamma(x, k) = exp(log_upper_incomplete_gamma(x, k)); underflows to 0 for large x.
double upper_incomplete_gamma(double x, double k);

/// Evaluation of the upper incomplete gamma at one point, keeping the pieces the renewal
/// hazard and its integrals need without cancellation.
struct IncompleteGamma {
    double x = 0.0;
    double log_upper = 0.0; ///< log Gamma(x, k)
    double log_ratio = 0.0; ///< log(x^(k-1) e^(-x) / Gamma(x, k)), i.e. the hazard at x for beta = 1
    double log_cf = 0.0;    ///< log of the continued fraction when `continued_fraction` is set
    bool continued_fraction = false;
};

IncompleteGamma incomplete_gamma(double x, double k);

/// log Gamma(a, k) - log Gamma(b, k) for a <= b, computed without cancellation when both
/// points fall in the continued-fraction regime.
double log_upper_gamma_drop(const IncompleteGamma& a, const IncompleteGamma& b, double k);

/// Standard normal CDF, accurate to ~1e-15 in both tails.
double normal_cdf(double z);

/// P(a < Z < b) for standard normal Z, computed from the tail that avoids cancellation.
double normal_interval_probability(double a, double b);

// ---------------------------------------------------------------------------------------
// Renewal (main-shock) hazard

/// Gamma renewal hazard mu(t) = t^(kappa-1) e^(-t/beta) / (Gamma(t/beta, kappa) beta^kappa).
/// Throws std::domain_error for t <= 0.
double renewal_hazard(double t, const RetasParams& params);
double renewal_log_hazard(double t, const RetasParams& params);

/// Integral of mu(s) over [a, b], via the cumulative hazard identity
/// log Gamma(a/beta, kappa) - log Gamma(b/beta, kappa). Throws std::domain_error if a > b or a < 0.
double renewal_hazard_integral(double a, double b, const RetasParams& params);

// ---------------------------------------------------------------------------------------
// Aftershock response

/// Modified Omori density ((p-1)/c)(1+t/c)^(-p). Throws std::domain_error for t <= 0,
/// p <= 1 or c <= 0.
double omori_density(double t, const RetasParams& params);
double omori_log_density(double t, const RetasParams& params);
/// Omori CDF 1 - (1+t/c)^(1-p); defined for t >= 0.
double omori_cdf(double t, const RetasParams& params);

/// Bivariate normal density with independent marginals of variance sigma1_sq, sigma2_sq.
double spatial_density(double dx, double dy, const RetasParams& params);
double spatial_log_density(double dx, double dy, const RetasParams& params);
/// Mass of the spatial response centred at (cx, cy) falling inside the window.
double spatial_mass(double cx, double cy, const SpatialWindow& window, const RetasParams& params);

/// Expected direct offspring k(m) = A exp(alpha (m - m0)). Throws std::domain_error for m < m0.
double boost(double m, const RetasParams& params, double m0);

// ---------------------------------------------------------------------------------------
// Magnitudes

double magnitude_density(double m, const MagnitudeParams& mag);
double magnitude_loglik(const Catalog& catalog, const MagnitudeParams& mag);
/// Closed-form MLE gamma = n / sum(m_i - m0). Throws DataError on an empty catalog or
/// when every magnitude equals m0 (the estimate diverges).
MagnitudeParams magnitude_mle(const Catalog& catalog);

struct Productivity {
    double value = 0.0;
    bool supercritical = false;
};

/// Mean direct offspring per event, A gamma / (gamma - alpha). Returns +inf flagged
/// supercritical when gamma <= alpha.
Productivity productivity(const RetasParams& params, double gamma);

} // namespace retas
