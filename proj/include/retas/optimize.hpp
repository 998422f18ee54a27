#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace retas {

using Objective = std::function<double(const std::vector<double>&)>;

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    std::size_t max_evals = 4000;
    double x_tol = 1e-6;   ///< simplex diameter
    double f_tol = 1e-8;   ///< spread of vertex values
    double initial_step = 0.1;
};

/// Nelder-Mead simplex minimisation with standard coefficients and an axis-aligned start.
/// Non-finite objective values are treated as +inf.
MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt);

struct BfgsOptions {
    std::size_t max_iter = 100;
    std::size_t max_evals = 4000;
    double g_tol = 1e-5;    ///< max-norm of the gradient
    double f_tol = 1e-10;   ///< relative change in value
    double step = 1e-5;     ///< central-difference step
};

/// Quasi-Newton minimisation with central-difference gradients and backtracking line search.
/// Never returns a point worse than x0.
MinimizeResult bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opt);

/// Central-difference gradient with step h.
std::vector<double> numeric_gradient(const Objective& f, const std::vector<double>& x, double h,
                                     std::size_t* evaluations = nullptr);

} // namespace retas
