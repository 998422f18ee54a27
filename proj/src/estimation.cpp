#include "retas/estimation.hpp"

#include "retas/errors.hpp"
#include "retas/optimize.hpp"
#include "retas/smoother.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace retas {

namespace {

constexpr std::size_t kP = RetasParams::kCount;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> free_indices(const ParamMask& fixed) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < kP; ++i) {
        if (!fixed[i]) {
            idx.push_back(i);
        }
    }
    return idx;
}

std::vector<double> kde_log_values(const WeightedKde& kde) {
    auto v = kde.evaluate_at_points();
    for (double& x : v) {
        x = std::log(x);
    }
    return v;
}

} // namespace

void OptimizerConfig::check() const {
    if (max_evals == 0 || !(x_tol > 0.0) || !(f_tol > 0.0) || !(initial_step > 0.0)) {
        throw std::invalid_argument("optimizer budgets and tolerances must be positive");
    }
}

std::array<double, kP> to_unconstrained(const RetasParams& p) {
    return {std::log(p.kappa), std::log(p.beta),      std::log(p.p - 1.0), std::log(p.c),
            std::log(p.sigma1_sq), std::log(p.sigma2_sq), std::log(p.A),       p.alpha};
}

RetasParams from_unconstrained(const std::array<double, kP>& u) {
    return {std::exp(u[0]), std::exp(u[1]), 1.0 + std::exp(u[2]), std::exp(u[3]),
            std::exp(u[4]), std::exp(u[5]), std::exp(u[6]),       u[7]};
}

MleResult mle_fixed_background(const Catalog& catalog, std::span<const double> log_nu, const RetasParams& init,
                               const OptimizerConfig& cfg) {
    cfg.check();
    init.check();
    const auto free = free_indices(cfg.fixed);
    const auto base = to_unconstrained(init);
    auto unpack = [&](const std::vector<double>& x) {
        auto u = base;
        for (std::size_t k = 0; k < free.size(); ++k) {
            u[free[k]] = x[k];
        }
        return from_unconstrained(u);
    };
    const ExcitationGeometry geometry(catalog);
    const Objective objective = [&](const std::vector<double>& x) {
        const RetasParams p = unpack(x);
        if (!p.is_valid()) {
            return kInf;
        }
        try {
            return -log_likelihood(geometry, p, log_nu);
        } catch (const NumericalError&) {
            return kInf;
        }
    };
    std::vector<double> x0(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) {
        x0[k] = base[free[k]];
    }
    const double f0 = objective(x0);

    MleResult res;
    res.params = init;
    res.loglik = -f0;
    res.evaluations = 1;
    if (free.empty()) {
        res.converged = true;
        return res;
    }
    std::vector<double> x = x0;
    double fx = f0;
    bool converged = false;
    std::size_t evals = 1;
    if (cfg.algorithm != OptimizerAlgorithm::QuasiNewtonNumericGrad) {
        NelderMeadOptions nm;
        nm.max_evals = cfg.max_evals;
        nm.x_tol = cfg.x_tol;
        nm.f_tol = cfg.f_tol;
        nm.initial_step = cfg.initial_step;
        const auto r = nelder_mead(objective, x, nm);
        evals += r.evaluations;
        if (r.value <= fx) {
            x = r.x;
            fx = r.value;
        }
        converged = r.converged;
    }
    if (cfg.algorithm != OptimizerAlgorithm::NelderMead && evals < cfg.max_evals) {
        BfgsOptions bo;
        bo.max_evals = cfg.max_evals - evals;
        bo.f_tol = 1e-12;
        bo.g_tol = 1e-4;
        const auto r = bfgs(objective, x, bo);
        evals += r.evaluations;
        if (r.value <= fx) {
            x = r.x;
            fx = r.value;
        }
        converged = (cfg.algorithm == OptimizerAlgorithm::QuasiNewtonNumericGrad) ? r.converged
                                                                                   : (converged || r.converged);
    }
    res.evaluations = evals;
    res.converged = converged;
    if (std::isfinite(fx) && fx <= f0) {
        res.params = unpack(x);
        res.loglik = -fx;
    }
    return res;
}

MleResult mle_fixed_background(const Catalog& catalog, const BackgroundIntensity& nu, const RetasParams& init,
                               const OptimizerConfig& cfg) {
    const auto log_nu = nu.log_at_events(catalog);
    return mle_fixed_background(catalog, log_nu, init, cfg);
}

// ---------------------------------------------------------------------------------------

Eigen::MatrixXd numeric_hessian(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, const std::vector<double>& h) {
    const std::size_t d = x.size();
    Eigen::MatrixXd H(d, d);
    const double f0 = f(x);
    std::vector<double> y = x;
    for (std::size_t i = 0; i < d; ++i) {
        y[i] = x[i] + h[i];
        const double fp = f(y);
        y[i] = x[i] - h[i];
        const double fm = f(y);
        y[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (std::size_t k = 0; k < i; ++k) {
            double s = 0.0;
            for (int a = -1; a <= 1; a += 2) {
                for (int b = -1; b <= 1; b += 2) {
                    y[i] = x[i] + a * h[i];
                    y[k] = x[k] + b * h[k];
                    s += a * b * f(y);
                }
            }
            y[i] = x[i];
            y[k] = x[k];
            H(i, k) = H(k, i) = s / (4.0 * h[i] * h[k]);
        }
    }
    return 0.5 * (H + H.transpose());
}

StandardErrors standard_errors_from_hessian(const Eigen::MatrixXd& hessian, const ParamMask& fixed) {
    const auto free = free_indices(fixed);
    const auto d = static_cast<Eigen::Index>(free.size());
    if (hessian.rows() != d || hessian.cols() != d) {
        throw std::invalid_argument("Hessian size does not match the free parameters");
    }
    StandardErrors out;
    if (d == 0 || !hessian.allFinite()) {
        return out;
    }
    const Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
    Eigen::MatrixXd inv;
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) {
        inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sym);
        if (!lu.isInvertible()) {
            return out;
        }
        inv = lu.inverse();
    }
    for (Eigen::Index a = 0; a < d; ++a) {
        const double v = inv(a, a);
        if (v > 0.0 && std::isfinite(v)) {
            out.available[free[a]] = true;
            out.se[free[a]] = std::sqrt(v);
        }
    }
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
            if (out.available[free[a]] && out.available[free[b]]) {
                out.covariance(free[a], free[b]) = inv(a, b);
            }
        }
    }
    return out;
}

StandardErrors standard_errors(const Catalog& catalog, std::span<const double> log_nu, const RetasParams& params,
                               const ParamMask& fixed, double rel_step) {
    params.check();
    const auto free = free_indices(fixed);
    const auto base = params.to_array();
    std::vector<double> x(free.size()), h(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) {
        x[k] = base[free[k]];
        h[k] = std::max(rel_step * std::fabs(x[k]), 1e-7);
    }
    const ExcitationGeometry geometry(catalog);
    auto f = [&](const std::vector<double>& y) {
        auto a = base;
        for (std::size_t k = 0; k < free.size(); ++k) {
            a[free[k]] = y[k];
        }
        const RetasParams p = RetasParams::from_array(a);
        if (!p.is_valid()) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return -log_likelihood(geometry, p, log_nu);
    };
    return standard_errors_from_hessian(numeric_hessian(f, x, h), fixed);
}

// ---------------------------------------------------------------------------------------

std::size_t FitReport::free_parameters() const {
    return static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), false));
}

void finalize_report(FitReport& report, const Catalog& catalog) {
    const auto n = static_cast<double>(catalog.size());
    const auto pts = epicentres(catalog);
    report.dof_kde = kde_dof(pts, report.h);
    const double k = static_cast<double>(report.free_parameters()) + report.dof_kde;
    report.aicc = n > k + 1.0 ? aicc(report.loglik, k, n) : std::numeric_limits<double>::quiet_NaN();
    try {
        report.mag = magnitude_mle(catalog);
        report.mag_loglik = magnitude_loglik(catalog, report.mag);
        const auto prod = productivity(report.params, report.mag.gamma);
        report.productivity = prod.value;
        report.supercritical = prod.supercritical;
    } catch (const DataError& e) {
        report.warnings.emplace_back(e.what());
    }
    const double total = std::accumulate(report.omega.begin(), report.omega.end(), 0.0);
    report.pct_mainshocks = report.omega.empty() ? 0.0 : 100.0 * total / n;
}

FitReport semiparametric_fit(const Catalog& catalog, double zeta, const SemiparametricConfig& cfg) {
    if (catalog.size() < 3) {
        throw DataError("semi-parametric fit needs at least three events");
    }
    if (!(zeta > 0.0)) {
        throw std::invalid_argument("bandwidth multiplier must be positive");
    }
    FitReport rep;
    rep.zeta = zeta;
    rep.fixed = cfg.optimizer.fixed;
    const BandwidthMatrix base = cfg.bandwidth ? *cfg.bandwidth : default_bandwidth(catalog);
    rep.h = base.scaled(zeta);
    const auto pts = epicentres(catalog);

    RetasParams params = cfg.init ? *cfg.init : telescoping_init(catalog, cfg.optimizer);
    std::vector<double> weights(catalog.size(), 1.0);
    std::vector<double> log_nu = kde_log_values(WeightedKde(pts, weights, rep.h));
    std::vector<double> last_log_nu;
    double prev = std::numeric_limits<double>::quiet_NaN();
    OptimizerConfig opt = cfg.optimizer;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        const auto mle = mle_fixed_background(catalog, log_nu, params, opt);
        params = mle.params;
        rep.trajectory.push_back(mle.loglik);
        if (!mle.converged) {
            rep.warnings.push_back("optimizer budget exhausted in iteration " + std::to_string(it));
        }
        const FilterState st = forward_filter(catalog, params, log_nu);
        const auto lf = backward_messages(st);
        const auto q = smooth_q(st, lf);
        const auto dec = decluster_smoothed(st, lf, q, catalog, params);
        weights = dec.omega;
        last_log_nu = log_nu;
        rep.iterations = it;
        rep.loglik = mle.loglik;
        const bool small_change = std::fabs(mle.loglik - prev) < cfg.tol;
        prev = mle.loglik;
        if (it >= cfg.min_iter && small_change) {
            rep.converged = true;
            break;
        }
        log_nu = kde_log_values(WeightedKde(pts, weights, rep.h));
        opt.initial_step = cfg.warm_step;
        opt.algorithm = cfg.warm_algorithm;
    }
    if (!rep.converged) {
        rep.warnings.push_back("log-likelihood did not settle within " + std::to_string(cfg.max_iter) +
                               " iterations");
    }
    rep.params = params;
    rep.omega = weights;
    rep.log_nu = last_log_nu;
    if (cfg.compute_se) {
        const auto se = standard_errors(catalog, last_log_nu, params, rep.fixed);
        rep.se = se.se;
        rep.se_available = se.available;
        rep.covariance = se.covariance;
    }
    finalize_report(rep, catalog);
    return rep;
}

SelectionResult select_smoothing(const Catalog& catalog, const std::vector<double>& zeta_grid,
                                 const SemiparametricConfig& cfg) {
    if (zeta_grid.empty()) {
        throw std::invalid_argument("smoothing grid is empty");
    }
    SelectionResult res;
    res.zetas = zeta_grid;
    double best = kInf;
    bool any = false;
    for (std::size_t i = 0; i < zeta_grid.size(); ++i) {
        try {
            FitReport r = semiparametric_fit(catalog, zeta_grid[i], cfg);
            if (std::isfinite(r.aicc) && (r.aicc < best || !any)) {
                best = r.aicc;
                res.best = i;
                any = true;
            }
            res.reports.emplace_back(std::move(r));
            res.errors.emplace_back();
        } catch (const std::exception& e) {
            res.reports.emplace_back(std::nullopt);
            res.errors.emplace_back(e.what());
        }
    }
    if (!any) {
        throw NumericalError("every smoothing multiplier failed to fit");
    }
    res.best_zeta = zeta_grid[res.best];
    return res;
}

// ---------------------------------------------------------------------------------------

std::pair<double, double> gamma_mle(std::span<const double> samples) {
    if (samples.size() < 2) {
        throw DataError("gamma MLE needs at least two samples");
    }
    double sum = 0.0, sum_log = 0.0;
    for (double x : samples) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw DataError("gamma MLE requires positive samples");
        }
        sum += x;
        sum_log += std::log(x);
    }
    const auto n = static_cast<double>(samples.size());
    const double mean = sum / n;
    const double s = std::log(mean) - sum_log / n;
    if (!(s > 1e-12)) {
        throw DataError("gamma MLE is degenerate: samples are all equal");
    }
    double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    for (int i = 0; i < 100; ++i) {
        const double f = std::log(k) - boost::math::digamma(k) - s;
        const double fp = 1.0 / k - boost::math::trigamma(k);
        // Newton in log k keeps the iterate positive.
        const double step = f / (fp * k);
        k *= std::exp(-std::clamp(step, -2.0, 2.0));
        if (std::fabs(step) < 1e-14) {
            break;
        }
    }
    return {k, mean / k};
}

RetasParams telescoping_init(const Catalog& catalog, const OptimizerConfig& cfg) {
    const std::size_t n = catalog.size();
    if (n == 0) {
        throw DataError("cannot initialise from an empty catalog");
    }
    std::vector<double> gaps;
    double prev = 0.0;
    for (const Event& e : catalog.events) {
        gaps.push_back(std::max(e.t - prev, 1e-9));
        prev = e.t;
    }
    const double mean_gap = catalog.T / static_cast<double>(n);
    double kappa1 = 1.0;
    double beta1 = mean_gap;
    try {
        std::tie(kappa1, beta1) = gamma_mle(gaps);
    } catch (const DataError&) {
    }
    kappa1 = std::clamp(kappa1, 0.05, 20.0);

    // Squared offsets to the nearest other epicentre.
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = kInf, bx = 0.0, by = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const double dx = catalog[j].x - catalog[i].x;
            const double dy = catalog[j].y - catalog[i].y;
            if (dx * dx + dy * dy < best) {
                best = dx * dx + dy * dy;
                bx = dx * dx;
                by = dy * dy;
            }
        }
        s1 += bx;
        s2 += by;
    }
    const double floor = 1e-8;
    s1 = std::max(n > 1 ? s1 / static_cast<double>(n) : 1.0, floor);
    s2 = std::max(n > 1 ? s2 / static_cast<double>(n) : 1.0, floor);

    RetasParams etas{1.0, 2.0 * mean_gap, 1.2, 0.01, s1, s2, 0.3, 1.0};
    try {
        const auto nu = [&] {
            const auto pts = epicentres(catalog);
            return kde_log_values(WeightedKde(pts, std::vector<double>(n, 1.0), default_bandwidth(catalog)));
        }();
        OptimizerConfig stage = cfg;
        stage.fixed = {true, false, false, false, true, true, false, false};
        stage.algorithm = OptimizerAlgorithm::NelderMead;
        stage.initial_step = 0.3;
        stage.max_evals = std::min<std::size_t>(cfg.max_evals, 1500);
        etas = mle_fixed_background(catalog, nu, etas, stage).params;
    } catch (const std::exception&) {
    }
    RetasParams out = etas;
    out.kappa = kappa1;
    out.beta = etas.beta / kappa1;
    if (!out.is_valid()) {
        out = RetasParams{1.0, mean_gap, 1.2, 0.01, s1, s2, 0.3, 1.0};
    }
    return out;
}

WaitingTimeSummary waiting_time_summary(const RetasParams& params, const std::optional<Eigen::Matrix2d>& cov) {
    if (!(params.kappa > 0.0) || !(params.beta > 0.0)) {
        throw std::domain_error("waiting-time summary needs kappa, beta > 0");
    }
    WaitingTimeSummary s;
    s.mean = params.kappa * params.beta;
    s.sd = params.beta * std::sqrt(params.kappa);
    if (cov) {
        const Eigen::Vector2d gm(params.beta, params.kappa);
        const Eigen::Vector2d gs(params.beta / (2.0 * std::sqrt(params.kappa)), std::sqrt(params.kappa));
        s.se_mean = std::sqrt(std::max(0.0, gm.dot(*cov * gm)));
        s.se_sd = std::sqrt(std::max(0.0, gs.dot(*cov * gs)));
    }
    return s;
}

} // namespace retas
