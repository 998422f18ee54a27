#include "excitation_kernel.hpp"

#include <cmath>

namespace retas::detail {

double excitation_row_sum(const double* __restrict lk, const double* __restrict dx2, const double* __restrict dy2,
                          const double* __restrict dt, std::size_t m, double h1, double h2, double p,
                          double inv_c) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        s += std::exp(lk[j] - dx2[j] * h1 - dy2[j] * h2 - p * std::log(1.0 + dt[j] * inv_c));
    }
    return s;
}

} // namespace retas::detail
