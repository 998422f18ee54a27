#include "retas/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace retas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe(double v) { return std::isfinite(v) ? v : kInf; }

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::fabs(x));
    }
    return m;
}

} // namespace

MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt) {
    const std::size_t d = x0.size();
    MinimizeResult res;
    std::size_t evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return safe(f(x));
    };

    std::vector<std::vector<double>> simplex(d + 1, x0);
    std::vector<double> fv(d + 1);
    fv[0] = eval(x0);
    for (std::size_t i = 0; i < d; ++i) {
        simplex[i + 1][i] += opt.initial_step;
        fv[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> order(d + 1);
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    bool converged = false;
    while (evals < opt.max_evals) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        {
            std::vector<std::vector<double>> s2;
            std::vector<double> f2;
            for (std::size_t i : order) {
                s2.push_back(simplex[i]);
                f2.push_back(fv[i]);
            }
            simplex.swap(s2);
            fv.swap(f2);
        }
        double diam = 0.0;
        for (std::size_t i = 1; i <= d; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                diam = std::max(diam, std::fabs(simplex[i][k] - simplex[0][k]));
            }
        }
        if (std::isfinite(fv[d]) && fv[d] - fv[0] <= opt.f_tol * (1.0 + std::fabs(fv[0])) && diam <= opt.x_tol) {
            converged = true;
            break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                centroid[k] += simplex[i][k] / static_cast<double>(d);
            }
        }
        const auto& worst = simplex[d];
        for (std::size_t k = 0; k < d; ++k) {
            xr[k] = centroid[k] + (centroid[k] - worst[k]);
        }
        const double fr = eval(xr);
        if (fr < fv[0]) {
            for (std::size_t k = 0; k < d; ++k) {
                xe[k] = centroid[k] + 2.0 * (centroid[k] - worst[k]);
            }
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[d] = xe;
                fv[d] = fe;
            } else {
                simplex[d] = xr;
                fv[d] = fr;
            }
            continue;
        }
        if (fr < fv[d - 1]) {
            simplex[d] = xr;
            fv[d] = fr;
            continue;
        }
        const bool outside = fr < fv[d];
        for (std::size_t k = 0; k < d; ++k) {
            xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k]) : centroid[k] + 0.5 * (worst[k] - centroid[k]);
        }
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[d])) {
            simplex[d] = xc;
            fv[d] = fc;
            continue;
        }
        for (std::size_t i = 1; i <= d; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
            }
            fv[i] = eval(simplex[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = simplex[best];
    res.value = fv[best];
    res.evaluations = evals;
    res.converged = converged;
    return res;
}

std::vector<double> numeric_gradient(const Objective& f, const std::vector<double>& x, double h,
                                     std::size_t* evaluations) {
    std::vector<double> g(x.size());
    std::vector<double> xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double hi = h * std::max(1.0, std::fabs(x[i]));
        xp[i] = x[i] + hi;
        const double fp = f(xp);
        xp[i] = x[i] - hi;
        const double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * hi);
    }
    if (evaluations) {
        *evaluations += 2 * x.size();
    }
    return g;
}

MinimizeResult bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opt) {
    const std::size_t d = x0.size();
    MinimizeResult res;
    std::size_t evals = 1;
    double fx = safe(f(x0));
    std::vector<double> x = std::move(x0);
    res.x = x;
    res.value = fx;
    if (!std::isfinite(fx)) {
        res.evaluations = evals;
        return res;
    }
    auto grad = [&](const std::vector<double>& at) {
        auto g = numeric_gradient(f, at, opt.step, &evals);
        for (double& v : g) {
            if (!std::isfinite(v)) {
                v = 0.0;
            }
        }
        return g;
    };
    std::vector<double> g = grad(x);
    // Inverse Hessian approximation, row-major.
    std::vector<double> H(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        H[i * d + i] = 1.0;
    }
    std::vector<double> dir(d), xn(d), s(d), y(d), Hy(d);
    bool converged = false;
    for (std::size_t it = 0; it < opt.max_iter && evals < opt.max_evals; ++it) {
        if (max_abs(g) < opt.g_tol) {
            converged = true;
            break;
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            dir[i] = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                dir[i] -= H[i * d + k] * g[k];
            }
            slope += dir[i] * g[i];
        }
        if (!(slope < 0.0)) {
            // Not a descent direction: reset to steepest descent.
            std::fill(H.begin(), H.end(), 0.0);
            slope = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                H[i * d + i] = 1.0;
                dir[i] = -g[i];
                slope -= g[i] * g[i];
            }
        }
        double step = 1.0;
        double fn = kInf;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < d; ++i) {
                xn[i] = x[i] + step * dir[i];
            }
            fn = safe(f(xn));
            ++evals;
            if (fn <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            converged = max_abs(g) < 1e3 * opt.g_tol;
            break;
        }
        const auto gn = grad(xn);
        double sy = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
            sy += s[i] * y[i];
        }
        const double rel = std::fabs(fx - fn) / (1.0 + std::fabs(fx));
        x = xn;
        fx = fn;
        g = gn;
        if (rel < opt.f_tol) {
            converged = true;
            break;
        }
        if (sy > 1e-12) {
            double yHy = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                Hy[i] = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    Hy[i] += H[i * d + k] * y[k];
                }
                yHy += y[i] * Hy[i];
            }
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t k = 0; k < d; ++k) {
                    H[i * d + k] += (1.0 + yHy * rho) * rho * s[i] * s[k] - rho * (Hy[i] * s[k] + s[i] * Hy[k]);
                }
            }
        }
    }
    res.x = x;
    res.value = fx;
    res.evaluations = evals;
    res.converged = converged;
    return res;
}

} // namespace retas
