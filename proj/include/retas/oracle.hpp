#pragma once

#include "retas/catalog.hpp"
#include "retas/kernels.hpp"
#include "retas/smoother.hpp"

#include <span>

namespace retas::oracle {

/// Log of the sum over every branching vector of the complete-data density. Uses Boost's
/// regularized incomplete gamma and normal CDF, independent of the library's special
/// functions. Throws std::invalid_argument for n > 10.
double brute_force_loglik(const Catalog& catalog, const RetasParams& params, std::span<const double> log_nu);

/// Posterior q, omega_ij, omega and pi from the same enumeration (n <= 8).
DeclusterResult brute_force_decluster(const Catalog& catalog, const RetasParams& params,
                                      std::span<const double> log_nu);

/// Filtered probabilities: for each event r, enumerates branching vectors of events 0..r-1
/// weighted by their density with survival to t_{r-1}, then mixes the main-shock and
/// parent odds at event r over the resulting last-main-shock distribution (n <= 8).
DeclusterResult brute_force_filtered(const Catalog& catalog, const RetasParams& params,
                                     std::span<const double> log_nu);

} // namespace retas::oracle
