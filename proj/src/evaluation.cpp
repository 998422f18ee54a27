#include "retas/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <limits>
#include <mutex>
#include <thread>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace retas {

RocResult roc_auc(std::span<const double> scores, std::span<const char> positive) {
    if (scores.size() != positive.size()) {
        throw std::invalid_argument("scores and labels differ in length");
    }
    std::size_t pos = 0;
    for (char p : positive) {
        pos += p ? 1 : 0;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) {
        throw std::invalid_argument("ROC needs both positive and negative labels");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    RocResult res;
    res.points.push_back({0.0, 0.0});
    double tp = 0.0, fp = 0.0, area = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        double dtp = 0.0, dfp = 0.0;
        while (i < order.size() && scores[order[i]] == s) {
            (positive[order[i]] ? dtp : dfp) += 1.0;
            ++i;
        }
        area += dfp * (tp + 0.5 * dtp);
        tp += dtp;
        fp += dfp;
        res.points.push_back({fp / static_cast<double>(neg), tp / static_cast<double>(pos)});
    }
    res.auc = area / (static_cast<double>(pos) * static_cast<double>(neg));
    return res;
}

double branching_accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("predicted and true labels differ in length");
    }
    if (truth.size() < 2) {
        return 1.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 1; i < truth.size(); ++i) {
        hits += (truth[i] != kExternalParent && predicted[i] == truth[i]) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size() - 1);
}

double branching_accuracy(const DeclusterResult& result, const SimulatedCatalog& truth) {
    const auto labels = most_probable_labels(result);
    return branching_accuracy(labels, truth.labels);
}

TrimResult mahalanobis_trim(const std::vector<std::array<double, RetasParams::kCount>>& estimates,
                            const RetasParams& truth, double frac, const ParamMask& ignore) {
    if (!(frac >= 0.0) || !(frac < 1.0)) {
        throw std::invalid_argument("trim fraction must lie in [0, 1)");
    }
    const std::size_t m = estimates.size();
    TrimResult res;
    res.keep.assign(m, 1);
    res.distance.assign(m, 0.0);
    const auto drop = static_cast<std::size_t>(std::floor(frac * static_cast<double>(m) + 1e-9));
    if (m < 2) {
        return res;
    }
    std::vector<std::size_t> coords;
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        if (!ignore[k]) {
            coords.push_back(k);
        }
    }
    const auto d = static_cast<Eigen::Index>(coords.size());
    const auto t = truth.to_array();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(m), d);
    for (std::size_t i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            X(static_cast<Eigen::Index>(i), k) = estimates[i][coords[k]];
        }
    }
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd centred = X.rowwise() - mean;
    const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(m - 1);
    Eigen::VectorXd tv(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        tv(k) = t[coords[k]];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const double scale = cov.diagonal().cwiseAbs().maxCoeff();
    const bool singular = ldlt.info() != Eigen::Success || !(scale > 0.0) ||
                          ldlt.vectorD().minCoeff() <= 1e-12 * scale;
    res.diagonal_fallback = singular;
    for (std::size_t i = 0; i < m; ++i) {
        const Eigen::VectorXd diff = X.row(static_cast<Eigen::Index>(i)).transpose() - tv;
        double dist = 0.0;
        if (!singular) {
            dist = diff.dot(ldlt.solve(diff));
        } else {
            for (Eigen::Index k = 0; k < d; ++k) {
                const double v = cov(k, k);
                dist += v > 0.0 ? diff(k) * diff(k) / v : 0.0;
            }
        }
        res.distance[i] = std::sqrt(std::max(0.0, dist));
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return res.distance[a] > res.distance[b]; });
    for (std::size_t k = 0; k < drop; ++k) {
        res.keep[order[k]] = 0;
    }
    return res;
}

std::vector<ClusterSummary> cluster_report(std::span<const std::size_t> labels) {
    const std::size_t n = labels.size();
    std::vector<std::size_t> root(n), depth(n, 0);
    std::vector<ClusterSummary> clusters;
    std::vector<std::size_t> slot(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = labels[i];
        if (l == 0 || l == kExternalParent || l > i) {
            root[i] = i;
            slot[i] = clusters.size();
            clusters.push_back({i, 1, 0});
            continue;
        }
        const std::size_t parent = l - 1;
        root[i] = root[parent];
        depth[i] = depth[parent] + 1;
        ClusterSummary& c = clusters[slot[root[i]]];
        ++c.size;
        c.generations = std::max(c.generations, depth[i]);
    }
    std::stable_sort(clusters.begin(), clusters.end(), [](const ClusterSummary& a, const ClusterSummary& b) {
        return a.size != b.size ? a.size > b.size : a.root < b.root;
    });
    return clusters;
}

std::vector<ClusterSummary> cluster_report(const DeclusterResult& result) {
    const auto labels = most_probable_labels(result);
    return cluster_report(labels);
}

// ---------------------------------------------------------------------------------------

namespace {

std::vector<char> main_flags(const SimulatedCatalog& sim) {
    std::vector<char> flags;
    for (std::size_t i = 1; i < sim.labels.size(); ++i) {
        flags.push_back(sim.labels[i] == 0 ? 1 : 0);
    }
    return flags;
}

std::optional<double> auc_of(const std::vector<double>& omega, const std::vector<char>& flags) {
    if (omega.size() != flags.size() + 1) {
        return std::nullopt;
    }
    try {
        return roc_auc(std::span<const double>(omega).subspan(1), flags).auc;
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

RetasParams etas_start(const RetasParams& truth) {
    RetasParams p = truth;
    p.beta = truth.kappa * truth.beta;
    p.kappa = 1.0;
    return p;
}

} // namespace

ReplicateResult run_replicate(const StudyConfig& cfg, std::size_t index) {
    const auto start = std::chrono::steady_clock::now();
    ReplicateResult res;
    res.index = index;
    try {
        SimConfig sc = cfg.sim;
        sc.replicate = index;
        const SimulatedCatalog sim = simulate_catalog(sc);
        const Catalog& cat = sim.catalog;
        res.n = cat.size();
        const RetasParams& truth = sc.params;

        SemiparametricConfig semi;
        semi.optimizer = cfg.optimizer;
        semi.tol = cfg.tol;
        semi.init = truth;
        semi.compute_se = cfg.compute_se;

        std::vector<double> log_nu;
        std::vector<double> omega;
        if (cfg.fit_mode == StudyFitMode::KnownBackground) {
            log_nu = BackgroundIntensity::parametric(sc.nu_mean_x, sc.nu_mean_y, sc.nu_var_x, sc.nu_var_y)
                         .log_at_events(cat);
            const auto mle = mle_fixed_background(cat, log_nu, truth, cfg.optimizer);
            res.estimate = mle.params;
            res.loglik = mle.loglik;
            res.converged = mle.converged;
            if (cfg.compute_se) {
                const auto se = standard_errors(cat, log_nu, mle.params, cfg.optimizer.fixed);
                res.se = se.se;
                res.se_available = se.available;
            }
        } else if (cfg.fit_mode == StudyFitMode::Semiparametric) {
            const FitReport rep = semiparametric_fit(cat, cfg.zeta, semi);
            res.estimate = rep.params;
            res.loglik = rep.loglik;
            res.converged = rep.converged;
            res.se = rep.se;
            res.se_available = rep.se_available;
            log_nu = rep.log_nu;
            omega = rep.omega;
        } else {
            if (cfg.zeta_grid.empty()) {
                throw std::invalid_argument("AICc study needs a smoothing grid");
            }
            double best = std::numeric_limits<double>::infinity();
            for (double z : cfg.zeta_grid) {
                const FitReport rep = semiparametric_fit(cat, z, semi);
                res.per_zeta.push_back({z, rep.params, rep.loglik, rep.dof_kde, rep.aicc, rep.converged});
                if (rep.aicc < best) {
                    best = rep.aicc;
                    res.selected = res.per_zeta.size() - 1;
                    res.estimate = rep.params;
                    res.loglik = rep.loglik;
                    res.converged = rep.converged;
                    res.se = rep.se;
                    res.se_available = rep.se_available;
                    log_nu = rep.log_nu;
                    omega = rep.omega;
                }
            }
        }

        if (cfg.decluster) {
            const auto flags = main_flags(sim);
            const FilterState st = forward_filter(cat, res.estimate, log_nu);
            const auto lf = backward_messages(st);
            const auto q = smooth_q(st, lf);
            const auto smoothed = decluster_smoothed(st, lf, q, cat, res.estimate);
            const auto filtered = decluster_filtered(st, cat, res.estimate);
            res.auc_smoothed = auc_of(smoothed.omega, flags);
            res.auc_filtered = auc_of(filtered.omega, flags);
            res.accuracy_smoothed = branching_accuracy(smoothed, sim);
            res.accuracy_filtered = branching_accuracy(filtered, sim);

            // ETAS: the same procedure with kappa held at one.
            StudyConfig etas_cfg = cfg;
            etas_cfg.optimizer.fixed[0] = true;
            RetasParams etas_params;
            std::vector<double> etas_log_nu;
            if (cfg.fit_mode == StudyFitMode::KnownBackground) {
                etas_log_nu = log_nu;
                etas_params = mle_fixed_background(cat, log_nu, etas_start(truth), etas_cfg.optimizer).params;
            } else {
                SemiparametricConfig es = semi;
                es.optimizer = etas_cfg.optimizer;
                es.init = etas_start(truth);
                es.compute_se = false;
                const double z = cfg.fit_mode == StudyFitMode::AiccSelected ? res.per_zeta[res.selected].zeta : cfg.zeta;
                const FitReport rep = semiparametric_fit(cat, z, es);
                etas_params = rep.params;
                etas_log_nu = rep.log_nu;
            }
            const FilterState est = forward_filter(cat, etas_params, etas_log_nu);
            const auto etas = decluster_filtered(est, cat, etas_params);
            res.auc_etas = auc_of(etas.omega, flags);
            res.accuracy_etas = branching_accuracy(etas, sim);
        }
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

StudyResult aggregate_study(const StudyConfig& cfg, std::vector<ReplicateResult> replicates) {
    StudyResult out;
    out.replicates = std::move(replicates);
    std::vector<std::array<double, RetasParams::kCount>> est;
    std::vector<std::size_t> ok_index;
    for (std::size_t i = 0; i < out.replicates.size(); ++i) {
        if (out.replicates[i].ok) {
            est.push_back(out.replicates[i].estimate.to_array());
            ok_index.push_back(i);
        } else {
            ++out.failures;
        }
    }
    const double frac = est.size() >= 20 ? cfg.trim_frac : 0.0;
    TrimResult trim = mahalanobis_trim(est, cfg.sim.params, frac, cfg.optimizer.fixed);
    out.trim.keep.assign(out.replicates.size(), 0);
    out.trim.distance.assign(out.replicates.size(), 0.0);
    out.trim.diagonal_fallback = trim.diagonal_fallback;
    for (std::size_t k = 0; k < ok_index.size(); ++k) {
        out.trim.keep[ok_index[k]] = trim.keep[k];
        out.trim.distance[ok_index[k]] = trim.distance[k];
    }

    constexpr std::size_t P = RetasParams::kCount;
    const auto truth = cfg.sim.params.to_array();
    AggregateRow& row = out.aggregate;
    std::array<double, P> se_sum{}, covered{}, se_count{};
    for (std::size_t i = 0; i < out.replicates.size(); ++i) {
        if (!out.trim.keep[i]) {
            continue;
        }
        const auto& r = out.replicates[i];
        const auto e = r.estimate.to_array();
        ++row.count;
        for (std::size_t k = 0; k < P; ++k) {
            row.est[k] += e[k];
            if (r.se_available[k]) {
                se_sum[k] += r.se[k];
                se_count[k] += 1.0;
                covered[k] += std::fabs(e[k] - truth[k]) <= 1.96 * r.se[k] ? 1.0 : 0.0;
            }
        }
    }
    if (row.count == 0) {
        return out;
    }
    for (std::size_t k = 0; k < P; ++k) {
        row.est[k] /= static_cast<double>(row.count);
        row.mean_se[k] = se_count[k] > 0.0 ? se_sum[k] / se_count[k] : 0.0;
        row.cp[k] = se_count[k] > 0.0 ? covered[k] / se_count[k] : 0.0;
    }
    if (row.count > 1) {
        for (std::size_t i = 0; i < out.replicates.size(); ++i) {
            if (!out.trim.keep[i]) {
                continue;
            }
            const auto e = out.replicates[i].estimate.to_array();
            for (std::size_t k = 0; k < P; ++k) {
                row.sd[k] += (e[k] - row.est[k]) * (e[k] - row.est[k]);
            }
        }
        for (std::size_t k = 0; k < P; ++k) {
            row.sd[k] = std::sqrt(row.sd[k] / static_cast<double>(row.count - 1));
        }
    }
    return out;
}

StudyResult run_study(const StudyConfig& cfg, const std::function<void(const ReplicateResult&)>& on_replicate,
                      unsigned threads, const std::vector<ReplicateResult>& completed) {
    std::vector<std::optional<ReplicateResult>> slots(cfg.replicates);
    for (const auto& r : completed) {
        if (r.index < slots.size()) {
            slots[r.index] = r;
        }
    }
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) {
            todo.push_back(i);
        }
    }
    std::atomic<std::size_t> next{0};
    std::mutex lock;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size()) {
                return;
            }
            ReplicateResult r = run_replicate(cfg, todo[k]);
            std::lock_guard<std::mutex> guard(lock);
            if (on_replicate) {
                on_replicate(r);
            }
            slots[todo[k]] = std::move(r);
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(todo.size())));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    std::vector<ReplicateResult> reps;
    reps.reserve(slots.size());
    for (auto& s : slots) {
        reps.push_back(std::move(*s));
    }
    return aggregate_study(cfg, std::move(reps));
}

} // namespace retas
