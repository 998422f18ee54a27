#include "retas/kde.hpp"

#include "retas/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace retas {

std::vector<Point2> epicentres(const Catalog& catalog) {
    std::vector<Point2> pts;
    pts.reserve(catalog.size());
    for (const Event& e : catalog.events) {
        pts.push_back({e.x, e.y});
    }
    return pts;
}

WeightedKde::WeightedKde(std::vector<Point2> points, std::vector<double> weights, BandwidthMatrix h)
    : points_(std::move(points)), weights_(std::move(weights)), h_(h) {
    if (points_.size() != weights_.size()) {
        throw std::invalid_argument("KDE points and weights differ in length");
    }
    if (!h_.is_positive_definite()) {
        throw std::invalid_argument("KDE bandwidth matrix must be positive definite");
    }
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("KDE weights must be finite and nonnegative");
        }
        weight_sum_ += w;
    }
    if (!(weight_sum_ > 0.0)) {
        throw std::invalid_argument("KDE weight sum must be positive");
    }
    const double det = h_.det();
    inv11_ = h_.h22 / det;
    inv12_ = -h_.h12 / det;
    inv22_ = h_.h11 / det;
    norm_ = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
}

double WeightedKde::evaluate(double x, double y) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (weights_[i] == 0.0) {
            continue;
        }
        const double dx = points_[i].x - x;
        const double dy = points_[i].y - y;
        const double r2 = inv11_ * dx * dx + 2.0 * inv12_ * dx * dy + inv22_ * dy * dy;
        sum += weights_[i] * std::exp(-0.5 * r2);
    }
    return norm_ * sum / weight_sum_;
}

std::vector<double> WeightedKde::evaluate_at_points() const {
    std::vector<double> out;
    out.reserve(points_.size());
    for (const Point2& q : points_) {
        out.push_back(evaluate(q.x, q.y));
    }
    return out;
}

BandwidthMatrix default_bandwidth(std::span<const Point2> points) {
    const std::size_t n = points.size();
    if (n < 2) {
        throw DataError("default bandwidth needs at least two epicentres");
    }
    double mx = 0.0, my = 0.0;
    for (const Point2& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const Point2& p : points) {
        const double dx = p.x - mx;
        const double dy = p.y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const double denom = static_cast<double>(n - 1);
    sxx /= denom;
    sxy /= denom;
    syy /= denom;
    const double det = sxx * syy - sxy * sxy;
    if (!(sxx > 0.0) || !(det > 1e-12 * sxx * syy)) {
        throw DataError("epicentre covariance is singular; cannot form a bandwidth");
    }
    const double scale = std::cbrt(1.0 / static_cast<double>(n));
    return {scale * sxx, scale * sxy, scale * syy};
}

BandwidthMatrix default_bandwidth(const Catalog& catalog) {
    const auto pts = epicentres(catalog);
    return default_bandwidth(pts);
}

double kde_dof(std::span<const Point2> points, const BandwidthMatrix& h) {
    if (!h.is_positive_definite()) {
        throw std::invalid_argument("bandwidth matrix must be positive definite");
    }
    const double det = h.det();
    const double i11 = h.h22 / det;
    const double i12 = -h.h12 / det;
    const double i22 = h.h11 / det;
    double dof = 0.0;
    for (const Point2& pi : points) {
        double denom = 0.0;
        for (const Point2& pl : points) {
            const double dx = pl.x - pi.x;
            const double dy = pl.y - pi.y;
            denom += std::exp(-0.5 * (i11 * dx * dx + 2.0 * i12 * dx * dy + i22 * dy * dy));
        }
        dof += 1.0 / denom;
    }
    return dof;
}

double aicc(double loglik, double k, double n) {
    if (!(n > k + 1.0)) {
        throw std::domain_error("AICc undefined unless n > k + 1");
    }
    return -2.0 * loglik + 2.0 * n * k / (n - k - 1.0);
}

} // namespace retas
