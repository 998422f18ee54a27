#pragma once

#include "retas/catalog.hpp"
#include "retas/kde.hpp"
#include "retas/kernels.hpp"
#include "retas/likelihood.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace retas {

using ParamMask = std::array<bool, RetasParams::kCount>;

enum class OptimizerAlgorithm { NelderMead, QuasiNewtonNumericGrad, NelderMeadThenQuasiNewton };

struct OptimizerConfig {
    OptimizerAlgorithm algorithm = OptimizerAlgorithm::NelderMeadThenQuasiNewton;
    std::size_t max_evals = 6000;
    double x_tol = 1e-5;
    double f_tol = 1e-9;
    /// Initial simplex edge in the transformed space.
    double initial_step = 0.1;
    /// Parameters held at their initial value (e.g. kappa for the ETAS special case).
    ParamMask fixed{};

    /// Throws std::invalid_argument unless tolerances and budgets are positive.
    void check() const;
};

/// Unconstrained coordinates: log for kappa, beta, c, variances and A; log(p - 1); alpha as is.
std::array<double, RetasParams::kCount> to_unconstrained(const RetasParams& params);
RetasParams from_unconstrained(const std::array<double, RetasParams::kCount>& u);

struct MleResult {
    RetasParams params;
    double loglik = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Maximises the log-likelihood with nu held fixed. The result never has a lower
/// log-likelihood than `init`; `converged` is false when the evaluation budget ran out.
MleResult mle_fixed_background(const Catalog& catalog, std::span<const double> log_nu, const RetasParams& init,
                               const OptimizerConfig& cfg);
MleResult mle_fixed_background(const Catalog& catalog, const BackgroundIntensity& nu, const RetasParams& init,
                               const OptimizerConfig& cfg);

struct StandardErrors {
    std::array<double, RetasParams::kCount> se{};
    std::array<bool, RetasParams::kCount> available{};
    /// Inverse observed information over all parameters; rows and columns of fixed or
    /// unavailable parameters are zero.
    Eigen::MatrixXd covariance = Eigen::MatrixXd::Zero(RetasParams::kCount, RetasParams::kCount);
};

/// Inverts a symmetric Hessian of a negative log-likelihood restricted to the free
/// coordinates. When it is not positive definite, coordinates with a non-positive diagonal in
/// the inverse are flagged unavailable.
StandardErrors standard_errors_from_hessian(const Eigen::MatrixXd& hessian, const ParamMask& fixed);

/// Central-difference Hessian of f at x with per-coordinate steps h, symmetrised.
Eigen::MatrixXd numeric_hessian(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, const std::vector<double>& h);

/// Observed-information standard errors in the original parameterisation. Steps are
/// h_i = max(rel_step |theta_i|, 1e-7).
StandardErrors standard_errors(const Catalog& catalog, std::span<const double> log_nu, const RetasParams& params,
                               const ParamMask& fixed = {}, double rel_step = 1e-5);

struct FitReport {
    RetasParams params;
    std::array<double, RetasParams::kCount> se{};
    std::array<bool, RetasParams::kCount> se_available{};
    Eigen::MatrixXd covariance = Eigen::MatrixXd::Zero(RetasParams::kCount, RetasParams::kCount);
    double loglik = 0.0; ///< magnitude term excluded
    MagnitudeParams mag;
    double mag_loglik = 0.0;
    double dof_kde = 0.0;
    double aicc = 0.0;
    double productivity = 0.0;
    bool supercritical = false;
    double pct_mainshocks = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double zeta = 1.0;
    BandwidthMatrix h;            ///< bandwidth actually used (zeta already applied)
    ParamMask fixed{};
    std::vector<double> omega;    ///< final smoothed main-shock probabilities (KDE weights)
    std::vector<double> log_nu;   ///< background at the events used by the final MLE
    std::vector<double> trajectory; ///< log-likelihood after each iteration
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t free_parameters() const;
};

struct SemiparametricConfig {
    OptimizerConfig optimizer;
    double tol = 0.001;
    std::size_t max_iter = 50;
    std::size_t min_iter = 2;
    /// Base bandwidth before the zeta multiplier; the normal-reference rule when absent.
    std::optional<BandwidthMatrix> bandwidth;
    /// Starting parameters; the telescoping initialiser when absent.
    std::optional<RetasParams> init;
    bool compute_se = true;
    /// Optimiser for iterations after the first, which start next to the previous optimum.
    OptimizerAlgorithm warm_algorithm = OptimizerAlgorithm::QuasiNewtonNumericGrad;
    /// Initial simplex edge for warm iterations when they use Nelder-Mead.
    double warm_step = 0.05;
};

/// Alternates a fixed-background MLE with a smoothed-weight KDE update of nu until the
/// log-likelihood changes by less than `tol`. Non-convergence is flagged, not thrown.
FitReport semiparametric_fit(const Catalog& catalog, double zeta, const SemiparametricConfig& cfg);

/// Fills in the summary fields of a report from fitted parameters and KDE weights.
void finalize_report(FitReport& report, const Catalog& catalog);

struct SelectionResult {
    std::size_t best = 0;
    double best_zeta = 0.0;
    std::vector<double> zetas;
    std::vector<std::optional<FitReport>> reports; ///< empty where the fit failed
    std::vector<std::string> errors;
};

/// Fits each zeta and selects the smallest AICc. Throws NumericalError if every fit fails.
SelectionResult select_smoothing(const Catalog& catalog, const std::vector<double>& zeta_grid,
                                 const SemiparametricConfig& cfg);

/// Gamma MLE (shape, scale) of positive samples by Newton iteration on the profile equation.
std::pair<double, double> gamma_mle(std::span<const double> samples);

/// Starting values from nested models: gamma renewal on all inter-event times, a temporal
/// ETAS fit with kappa fixed at 1, and variances from nearest-neighbour offsets.
RetasParams telescoping_init(const Catalog& catalog, const OptimizerConfig& cfg = {});

struct WaitingTimeSummary {
    double mean = 0.0;
    double sd = 0.0;
    std::optional<double> se_mean;
    std::optional<double> se_sd;
};

/// Mean kappa*beta and standard deviation beta*sqrt(kappa) of main-shock waiting times, with
/// delta-method SEs from the (kappa, beta) covariance block when given.
WaitingTimeSummary waiting_time_summary(const RetasParams& params,
                                        const std::optional<Eigen::Matrix2d>& cov = std::nullopt);

} // namespace retas
