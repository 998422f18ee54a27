#pragma once

#include "retas/catalog.hpp"
#include "retas/kde.hpp"
#include "retas/kernels.hpp"
#include "retas/triangular.hpp"

#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace retas {

/// Spatial density nu(x, y) of main-shock epicentres. Assumed to integrate to one over the
/// catalog window.
class BackgroundIntensity {
public:
    struct Parametric {
        double mean_x = 0.0;
        double mean_y = 0.0;
        double var_x = 1.0;
        double var_y = 1.0;
    };
    struct Constant {
        double level = 1.0;
    };
    enum class Kind { Parametric, Kde, Constant };

    /// Bivariate normal with independent marginals.
    static BackgroundIntensity parametric(double mean_x, double mean_y, double var_x, double var_y);
    static BackgroundIntensity kde(std::shared_ptr<const WeightedKde> estimate);
    static BackgroundIntensity constant(double level);

    [[nodiscard]] double evaluate(double x, double y) const;
    /// log nu at each event epicentre.
    [[nodiscard]] std::vector<double> log_at_events(const Catalog& catalog) const;

    [[nodiscard]] Kind kind() const;
    [[nodiscard]] const Parametric* as_parametric() const { return std::get_if<Parametric>(&v_); }
    [[nodiscard]] const WeightedKde* as_kde() const;
    [[nodiscard]] const Constant* as_constant() const { return std::get_if<Constant>(&v_); }

private:
    using Variant = std::variant<Parametric, std::shared_ptr<const WeightedKde>, Constant>;
    explicit BackgroundIntensity(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

/// Output of the forward filtering pass. Rows follow event order: row r (1..n) refers to
/// event r (0-based), with row n standing for the survival stretch from the last event to T.
/// Row r holds columns j = 0..r-1, the candidate indices of the most recent main-shock.
struct FilterState {
    std::size_t n = 0;
    TriangularArray<double> log_p;  ///< rows 1..n: log P(last main-shock before event r is j | events < r)
    TriangularArray<double> log_S;  ///< rows 1..n: -integral of mu(s - t_j) over [t_{r-1}, t_r]
    TriangularArray<double> log_mu; ///< rows 1..n-1: log mu(t_r - t_j)
    TriangularArray<double> log_d;  ///< rows 1..n-1: log d_rj
    std::vector<double> log_nu;     ///< log nu at each event
    std::vector<double> log_phi;    ///< log excitation at each event (-inf for event 0)
    double log_d1 = 0.0;
    double Phi_T = 0.0;             ///< excitation compensator at T
    double loglik = 0.0;            ///< magnitude term excluded

    [[nodiscard]] double p(std::size_t r, std::size_t j) const;
};

/// Pairwise time lags and squared offsets between events, built once per catalog and reused
/// across parameter values. Holds a reference to the catalog, which must outlive it.
class ExcitationGeometry {
public:
    explicit ExcitationGeometry(const Catalog& catalog);

    [[nodiscard]] const Catalog& catalog() const { return *catalog_; }
    [[nodiscard]] std::span<const double> lags(std::size_t r) const { return dt_.row(r); }
    [[nodiscard]] std::span<const double> dx2(std::size_t r) const { return dx2_.row(r); }
    [[nodiscard]] std::span<const double> dy2(std::size_t r) const { return dy2_.row(r); }

private:
    const Catalog* catalog_;
    TriangularArray<double> dt_, dx2_, dy2_;
};

/// Excitation phi(t, x, y): summed aftershock response of events strictly before t.
double excitation(double t, double x, double y, const Catalog& catalog, const RetasParams& params);

/// log phi(t_i, x_i, y_i) for every event, -inf for the first.
std::vector<double> log_excitation_at_events(const Catalog& catalog, const RetasParams& params);
std::vector<double> log_excitation_at_events(const ExcitationGeometry& geometry, const RetasParams& params);

/// Phi(t) = sum over t_j < t of k(m_j) G(t - t_j) * spatial mass of event j inside `window`.
double excitation_compensator(double t, const Catalog& catalog, const RetasParams& params,
                              const SpatialWindow& window);
double excitation_compensator(double t, const Catalog& catalog, const RetasParams& params);

/// Full forward filter storing every triangular quantity. Throws NumericalError naming the
/// event index when an intermediate is not finite; DataError for an empty catalog.
FilterState forward_filter(const Catalog& catalog, const RetasParams& params,
                           const BackgroundIntensity& nu);
FilterState forward_filter(const Catalog& catalog, const RetasParams& params,
                           std::span<const double> log_nu);

/// Log-likelihood only, with O(n) memory. Filter entries whose probability falls below
/// exp(-kPruneLogRatio) of the row maximum are dropped; the excitation sums stay exact.
/// Returns -inf when the data are impossible under `params`.
double log_likelihood(const Catalog& catalog, const RetasParams& params, std::span<const double> log_nu);
double log_likelihood(const Catalog& catalog, const RetasParams& params, const BackgroundIntensity& nu);
/// Same value, reusing precomputed pair geometry (the fast path for optimisation).
double log_likelihood(const ExcitationGeometry& geometry, const RetasParams& params, std::span<const double> log_nu);

inline constexpr double kPruneLogRatio = 50.0;

} // namespace retas
