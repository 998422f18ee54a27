#pragma once

#include "retas/catalog.hpp"
#include "retas/estimation.hpp"
#include "retas/evaluation.hpp"
#include "retas/simulator.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace retas {

/// Declarative run configuration. Every section is optional; unknown keys are rejected.
///
/// {
///   "seed": 42, "threads": 1,
///   "params": {"kappa": .., "beta": .., "p": .., "c": .., "sigma1_sq": .., "sigma2_sq": .., "A": .., "alpha": ..},
///   "magnitude": {"gamma": 5, "m0": 0},
///   "background": {"type": "kde" | "parametric", "mean_x", "mean_y", "var_x", "var_y"},
///   "zeta": [0.5, 1.0],
///   "bandwidth": {"h11", "h12", "h22"},
///   "optimizer": {"algorithm": "nelder_mead" | "quasi_newton" | "nelder_mead_then_quasi_newton",
///                 "max_evals", "x_tol", "f_tol", "initial_step", "fixed": ["kappa"]},
///   "fit": {"tol", "max_iter", "min_iter", "compute_se"},
///   "catalog": {"columns": "time=..,x=..", "m0", "origin", "end", "wrap_longitude",
///               "window": {"x_min", "x_max", "y_min", "y_max"}},
///   "simulation": {"T", "nu_mean_x", "nu_mean_y", "nu_var_x", "nu_var_y", "replicates", "max_events",
///                  "window": {...}},
///   "study": {"fit_mode": "known" | "semiparametric" | "aicc", "zeta", "zeta_grid", "replicates",
///             "decluster", "trim_frac", "tol", "compute_se"},
///   "grid": {"nx", "ny"}
/// }
struct RunConfig {
    std::uint64_t seed = 1;
    std::optional<unsigned> threads;
    std::optional<RetasParams> params;
    MagnitudeParams magnitude{5.0, 0.0};

    bool parametric_background = false;
    double nu_mean_x = 0.0, nu_mean_y = 0.0, nu_var_x = 0.05, nu_var_y = 0.10;

    std::vector<double> zeta{1.0};
    std::optional<BandwidthMatrix> bandwidth;
    OptimizerConfig optimizer;
    double fit_tol = 0.001;
    std::size_t fit_max_iter = 50;
    std::size_t fit_min_iter = 2;
    bool compute_se = true;

    LoadOptions load;

    double sim_T = 250.0;
    SpatialWindow sim_window;
    std::size_t sim_replicates = 1;
    std::size_t sim_max_events = 1'000'000;

    StudyFitMode study_mode = StudyFitMode::KnownBackground;
    double study_zeta = 1.5;
    std::vector<double> study_zeta_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    std::size_t study_replicates = 100;
    bool study_decluster = false;
    double study_trim_frac = 0.05;
    double study_tol = 0.001;
    bool study_compute_se = true;

    std::size_t grid_nx = 100;
    std::size_t grid_ny = 100;

    /// Model parameters, the default simulation setting when absent.
    [[nodiscard]] RetasParams params_or_default() const;
    [[nodiscard]] SimConfig sim_config() const;
    [[nodiscard]] SemiparametricConfig semiparametric_config() const;
    [[nodiscard]] StudyConfig study_config() const;
    [[nodiscard]] BackgroundIntensity parametric_nu() const;
};

/// Throws DataError naming the offending key on unknown keys or ill-typed values.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical document of every effective setting (used for provenance and its hash). Unset
/// optional settings are omitted, so the result parses back to the same configuration.
nlohmann::json to_json(const RunConfig& cfg);

} // namespace retas
