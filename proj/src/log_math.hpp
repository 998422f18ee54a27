#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace retas::detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
    if (a < b) {
        std::swap(a, b);
    }
    if (a == kNegInf) {
        return kNegInf;
    }
    return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> v) {
    double mx = kNegInf;
    for (double x : v) {
        mx = std::max(mx, x);
    }
    if (mx == kNegInf || !std::isfinite(mx)) {
        return mx;
    }
    double s = 0.0;
    for (double x : v) {
        s += std::exp(x - mx);
    }
    return mx + std::log(s);
}

} // namespace retas::detail
