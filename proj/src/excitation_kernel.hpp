#pragma once

#include <cstddef>

namespace retas::detail {

/// sum_j exp(lk[j] - dx2[j] h1 - dy2[j] h2 - p log(1 + dt[j] inv_c)). Every exponent must be
/// nonpositive. Built with vectorised math; the summation order is fixed per build.
double excitation_row_sum(const double* lk, const double* dx2, const double* dy2, const double* dt,
                          std::size_t m, double h1, double h2, double p, double inv_c);

} // namespace retas::detail
