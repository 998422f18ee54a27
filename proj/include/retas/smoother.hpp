#pragma once

#include "retas/catalog.hpp"
#include "retas/kernels.hpp"
#include "retas/likelihood.hpp"
#include "retas/triangular.hpp"

#include <vector>

namespace retas {

enum class DeclusterMode { Smoothed, Filtered };

/// Branching-structure probabilities. Triangular arrays have n rows; row r (1..n-1) refers to
/// event r and column j < r to an earlier event.
struct DeclusterResult {
    DeclusterMode mode = DeclusterMode::Smoothed;
    TriangularArray<double> q;        ///< P(last main-shock before event r is j | data); equals p when filtered
    TriangularArray<double> omega_ij; ///< P(event r is a main-shock and the last one before it is j | data)
    std::vector<double> omega;        ///< P(event r is a main-shock | data); omega[0] = 1
    TriangularArray<double> pi;       ///< P(event j is the parent of event r | data)
    TriangularArray<double> log_f;    ///< rows 1..n of backward messages, each row normalised (smoothed only)

    [[nodiscard]] std::size_t size() const { return omega.size(); }
};

/// Backward messages log f, rows 1..n (n + 1 rows allocated). Each row is shifted so that its
/// log-sum-exp is zero; row-constant factors such as the excitation compensator increments are
/// dropped. Throws NumericalError naming (r, j) when a message is not finite.
TriangularArray<double> backward_messages(const FilterState& state);

/// q[r][j] proportional to f[r][j] p[r][j]. Throws NumericalError on a zero row.
TriangularArray<double> smooth_q(const FilterState& state, const TriangularArray<double>& log_f);

/// Smoothed main-shock and parent probabilities from messages and smoothed q.
DeclusterResult decluster_smoothed(const FilterState& state, const TriangularArray<double>& log_f,
                                   const TriangularArray<double>& q, const Catalog& catalog,
                                   const RetasParams& params);

/// Filtered main-shock and parent probabilities, mixing the filter weights p over the last
/// main-shock index; nu multiplies the renewal hazard as in the smoothed formulas.
DeclusterResult decluster_filtered(const FilterState& state, const Catalog& catalog, const RetasParams& params);

/// Runs the filter and the requested declustering pass.
DeclusterResult decluster(const Catalog& catalog, const RetasParams& params, const BackgroundIntensity& nu,
                          DeclusterMode mode);

/// argmax over {omega_r} and {pi_rj}: 0 for a main-shock, j + 1 for parent event j (0-based).
/// Ties go to the main-shock, then to the earliest parent. Event 0 is always labelled 0.
std::vector<std::size_t> most_probable_labels(const DeclusterResult& result);

} // namespace retas
