#pragma once

#include "retas/estimation.hpp"
#include "retas/simulator.hpp"
#include "retas/smoother.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace retas {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points; ///< from (0,0) to (1,1), one point per distinct score
    double auc = 0.0;
};

/// ROC curve of `scores` against binary labels (nonzero = positive) by sweeping the threshold
/// down through the distinct scores; AUC by the trapezoid rule, which equals the Mann-Whitney
/// statistic with ties counted one half. Throws std::invalid_argument unless both classes occur.
RocResult roc_auc(std::span<const double> scores, std::span<const char> positive);

/// Fraction of events 1..n-1 whose predicted label equals the true one. Events with an
/// external parent always count as wrong. Throws std::invalid_argument on length mismatch.
double branching_accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);
double branching_accuracy(const DeclusterResult& result, const SimulatedCatalog& truth);

struct TrimResult {
    std::vector<char> keep;
    std::vector<double> distance;
    bool diagonal_fallback = false;
};

/// Drops the fraction `frac` of estimates farthest from `truth` in Mahalanobis distance under the
/// sample covariance of the estimates. Falls back to per-coordinate standardisation when that
/// covariance is singular. Parameters listed in `ignore` are left out of the distance.
TrimResult mahalanobis_trim(const std::vector<std::array<double, RetasParams::kCount>>& estimates,
                            const RetasParams& truth, double frac, const ParamMask& ignore = {});

struct ClusterSummary {
    std::size_t root = 0;        ///< index of the main-shock at the root
    std::size_t size = 0;        ///< events in the cluster including the root
    std::size_t generations = 0; ///< depth of the deepest descendant (0 for a singleton)
};

/// Clusters of the most-probable forest, sorted by decreasing size then root index.
std::vector<ClusterSummary> cluster_report(std::span<const std::size_t> labels);
std::vector<ClusterSummary> cluster_report(const DeclusterResult& result);

// ---------------------------------------------------------------------------------------
// Monte-Carlo study

enum class StudyFitMode { KnownBackground, Semiparametric, AiccSelected };

struct StudyConfig {
    SimConfig sim;
    StudyFitMode fit_mode = StudyFitMode::KnownBackground;
    double zeta = 1.5;
    std::vector<double> zeta_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    std::size_t replicates = 100;
    OptimizerConfig optimizer;
    double tol = 0.001;
    bool compute_se = true;
    /// Also decluster (smoothed and filtered) and refit with kappa fixed at 1.
    bool decluster = false;
    double trim_frac = 0.05;
};

struct ZetaFit {
    double zeta = 0.0;
    RetasParams params;
    double loglik = 0.0;
    double dof = 0.0;
    double aicc = 0.0;
    bool converged = false;
};

struct ReplicateResult {
    std::size_t index = 0;
    std::size_t n = 0;
    bool ok = false;
    std::string error;
    RetasParams estimate;
    std::array<double, RetasParams::kCount> se{};
    std::array<bool, RetasParams::kCount> se_available{};
    double loglik = 0.0;
    bool converged = false;
    std::vector<ZetaFit> per_zeta; ///< AICc mode only
    std::size_t selected = 0;      ///< index into per_zeta
    std::optional<double> auc_smoothed, auc_filtered, auc_etas;
    std::optional<double> accuracy_smoothed, accuracy_filtered, accuracy_etas;
    double seconds = 0.0;
};

struct AggregateRow {
    std::array<double, RetasParams::kCount> est{};     ///< mean estimate
    std::array<double, RetasParams::kCount> sd{};      ///< empirical standard deviation
    std::array<double, RetasParams::kCount> mean_se{}; ///< mean estimated SE
    std::array<double, RetasParams::kCount> cp{};      ///< coverage of estimate +- 1.96 SE
    std::size_t count = 0;
};

struct StudyResult {
    std::vector<ReplicateResult> replicates;
    TrimResult trim;
    AggregateRow aggregate;
    std::size_t failures = 0;
};

/// Simulates replicate `index`, fits it per the configuration and declusters when asked.
/// Failures are captured in the result rather than thrown.
ReplicateResult run_replicate(const StudyConfig& cfg, std::size_t index);

/// Trims and aggregates finished replicates.
StudyResult aggregate_study(const StudyConfig& cfg, std::vector<ReplicateResult> replicates);

/// Runs every replicate not already in `completed` on up to `threads` workers. Replicates are
/// independent and seeded by index, so the result does not depend on the thread count.
/// `on_replicate` is called after each one under a lock (for checkpoints).
StudyResult run_study(const StudyConfig& cfg,
                      const std::function<void(const ReplicateResult&)>& on_replicate = {},
                      unsigned threads = 1, const std::vector<ReplicateResult>& completed = {});

} // namespace retas
