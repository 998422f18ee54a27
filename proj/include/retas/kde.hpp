#pragma once

#include "retas/catalog.hpp"

#include <span>
#include <vector>

namespace retas {

/// Symmetric positive-definite 2x2 smoothing matrix (variance units).
struct BandwidthMatrix {
    double h11 = 1.0;
    double h12 = 0.0;
    double h22 = 1.0;

    [[nodiscard]] double det() const { return h11 * h22 - h12 * h12; }
    [[nodiscard]] bool is_positive_definite() const { return h11 > 0.0 && det() > 0.0; }
    [[nodiscard]] BandwidthMatrix scaled(double zeta) const { return {zeta * h11, zeta * h12, zeta * h22}; }
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

std::vector<Point2> epicentres(const Catalog& catalog);

/// Weighted bivariate Gaussian kernel density estimate. Each point carries a nonnegative
/// weight; the estimate is the weight-normalised mixture of N((x_i, y_i), h) components.
class WeightedKde {
public:
    /// Throws std::invalid_argument on size mismatch, negative weights, zero weight sum or
    /// a bandwidth that is not positive definite.
    WeightedKde(std::vector<Point2> points, std::vector<double> weights, BandwidthMatrix h);

    [[nodiscard]] double evaluate(double x, double y) const;
    /// Evaluate at every stored point (O(n^2)).
    [[nodiscard]] std::vector<double> evaluate_at_points() const;

    [[nodiscard]] const std::vector<Point2>& points() const { return points_; }
    [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
    [[nodiscard]] const BandwidthMatrix& bandwidth() const { return h_; }
    [[nodiscard]] double weight_sum() const { return weight_sum_; }

private:
    std::vector<Point2> points_;
    std::vector<double> weights_;
    BandwidthMatrix h_;
    double weight_sum_ = 0.0;
    // Entries of h^{-1} and the normalising constant |det h|^{-1/2} / (2 pi).
    double inv11_ = 0.0, inv12_ = 0.0, inv22_ = 0.0;
    double norm_ = 0.0;
};

/// Bivariate normal-reference bandwidth h = n^(-1/3) * Sigma_hat, where Sigma_hat is the
/// sample covariance of the epicentres. The normal-reference constant (4/(d+2))^(2/(d+4))
/// equals one in two dimensions. Throws DataError when n < 2 or the covariance is singular.
BandwidthMatrix default_bandwidth(const Catalog& catalog);
BandwidthMatrix default_bandwidth(std::span<const Point2> points);

/// Trace of the KDE hat matrix: sum_i K(0) / sum_l K(|h^{-1/2}(p_l - p_i)|). Lies in [1, n].
double kde_dof(std::span<const Point2> points, const BandwidthMatrix& h);

/// -2 loglik + 2 n k / (n - k - 1). Throws std::domain_error when n <= k + 1.
double aicc(double loglik, double k, double n);

} // namespace retas
