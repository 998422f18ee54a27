#include "retas/catalog.hpp"
#include "retas/config.hpp"
#include "retas/errors.hpp"
#include "retas/estimation.hpp"
#include "retas/evaluation.hpp"
#include "retas/kde.hpp"
#include "retas/report.hpp"
#include "retas/simulator.hpp"
#include "retas/smoother.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace retas;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out = ".";
    std::string zeta;
    std::string columns;
    bool retry_failed = false;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !(v > 0.0)) {
            throw std::invalid_argument("--zeta expects comma-separated positive numbers, got '" + text + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw std::invalid_argument("--zeta list is empty");
    }
    return out;
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (const char* env = std::getenv("RETAS_THREADS"); env && *env) {
        cfg.threads = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
    if (c.threads) {
        cfg.threads = *c.threads;
    }
    if (!c.zeta.empty()) {
        cfg.zeta = parse_list(c.zeta);
        cfg.study_zeta_grid = cfg.zeta;
        cfg.study_zeta = cfg.zeta.front();
    }
    if (!c.columns.empty()) {
        const bool wrap = cfg.load.format.wrap_longitude;
        cfg.load.format = CatalogFormat::from_column_map(c.columns);
        cfg.load.format.wrap_longitude = wrap;
    }
    return cfg;
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) {
        throw DataError("cannot create output directory " + dir);
    }
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) {
        throw DataError("cannot write " + p.string());
    }
    return f;
}

void write_json(const fs::path& p, const json& doc) {
    auto f = open_out(p);
    f << doc.dump(2) << '\n';
    if (!f) {
        throw DataError("write failed: " + p.string());
    }
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_provenance(const fs::path& out, const std::string& command, const RunConfig& cfg,
                      const std::vector<std::string>& inputs) {
    const json config = to_json(cfg);
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
    write_json(out / "provenance.json", {{"tool", "retas"},
                                         {"version", kVersion},
                                         {"command", command},
                                         {"inputs", inputs},
                                         {"seed", cfg.seed},
                                         {"threads", cfg.threads.value_or(1)},
                                         {"config_hash", hash},
                                         {"config", config},
                                         {"started_utc", utc_now()}});
}

// ---------------------------------------------------------------------------------------

void write_labels(const fs::path& p, const SimulatedCatalog& sim) {
    auto f = open_out(p);
    f << "index,parent,generation\n";
    for (std::size_t i = 0; i < sim.labels.size(); ++i) {
        const std::size_t l = sim.labels[i];
        f << i << ',';
        if (l == 0) {
            f << -1;
        } else if (l == kExternalParent) {
            f << "external";
        } else {
            f << l - 1;
        }
        f << ',' << sim.generation[i] << '\n';
    }
}

int cmd_simulate(const Common& c) {
    const RunConfig cfg = resolve(c);
    const fs::path out = prepare_out(c.out);
    write_provenance(out, "simulate", cfg, {});
    const SimConfig sc = cfg.sim_config();
    const auto prod = productivity(sc.params, sc.mag.gamma);
    if (prod.supercritical || prod.value >= 1.0) {
        throw NumericalError("supercritical configuration: productivity A*gamma/(gamma-alpha) = " +
                             fmt17(prod.value) + " >= 1, the cascade does not die out");
    }
    const std::size_t reps = std::max<std::size_t>(1, cfg.sim_replicates);
    for (std::size_t r = 0; r < reps; ++r) {
        SimConfig one = sc;
        one.replicate = r;
        const SimulatedCatalog sim = simulate_catalog(one);
        std::string suffix;
        if (reps > 1) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "_%04zu", r);
            suffix = buf;
        }
        save_catalog(sim.catalog, out / ("catalog" + suffix + ".csv"));
        write_labels(out / ("labels" + suffix + ".csv"), sim);
        std::cerr << "replicate " << r << ": " << sim.catalog.size() << " events\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------------------

Catalog read_catalog(const std::string& path, const RunConfig& cfg) {
    Catalog cat = load_catalog(path, cfg.load);
    for (const auto& w : cat.meta.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    if (cat.meta.dropped_count() > 0) {
        std::cerr << "dropped " << cat.meta.dropped_count() << " events during ingestion\n";
    }
    return cat;
}

void write_fit_outputs(const fs::path& out, const std::string& stem, const FitReport& rep, const Catalog& cat,
                       const RunConfig& cfg, bool kde) {
    write_json(out / (stem + "report.json"), fit_report_to_json(rep, cat.size()));
    {
        auto f = open_out(out / (stem + "omega.csv"));
        f << "index,value\n";
        for (std::size_t i = 0; i < rep.omega.size(); ++i) {
            f << i << ',' << fmt17(rep.omega[i]) << '\n';
        }
    }
    if (!kde) {
        return;
    }
    const auto pts = epicentres(cat);
    {
        auto f = open_out(out / (stem + "kde.csv"));
        f << "# h11=" << fmt17(rep.h.h11) << " h12=" << fmt17(rep.h.h12) << " h22=" << fmt17(rep.h.h22) << '\n';
        f << "x,y,weight\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            f << fmt17(pts[i].x) << ',' << fmt17(pts[i].y) << ',' << fmt17(rep.omega[i]) << '\n';
        }
    }
    const WeightedKde est(pts, rep.omega, rep.h);
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    if (!cat.window.is_whole_plane()) {
        x0 = cat.window.x_min;
        x1 = cat.window.x_max;
        y0 = cat.window.y_min;
        y1 = cat.window.y_max;
    }
    auto f = open_out(out / (stem + "nu_grid.csv"));
    f << "x,y,nu\n";
    for (std::size_t i = 0; i < cfg.grid_nx; ++i) {
        const double x = x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(cfg.grid_nx - 1);
        for (std::size_t j = 0; j < cfg.grid_ny; ++j) {
            const double y = y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(cfg.grid_ny - 1);
            f << fmt17(x) << ',' << fmt17(y) << ',' << fmt17(est.evaluate(x, y)) << '\n';
        }
    }
}

FitReport parametric_fit(const Catalog& cat, const RunConfig& cfg) {
    const auto nu = cfg.parametric_nu();
    const auto log_nu = nu.log_at_events(cat);
    const RetasParams init = cfg.params ? *cfg.params : telescoping_init(cat, cfg.optimizer);
    const auto mle = mle_fixed_background(cat, log_nu, init, cfg.optimizer);
    FitReport rep;
    rep.params = mle.params;
    rep.loglik = mle.loglik;
    rep.converged = mle.converged;
    rep.iterations = 1;
    rep.fixed = cfg.optimizer.fixed;
    rep.log_nu = log_nu;
    rep.trajectory = {mle.loglik};
    if (!mle.converged) {
        rep.warnings.emplace_back("optimizer budget exhausted");
    }
    const auto st = forward_filter(cat, rep.params, log_nu);
    const auto lf = backward_messages(st);
    const auto q = smooth_q(st, lf);
    rep.omega = decluster_smoothed(st, lf, q, cat, rep.params).omega;
    if (cfg.compute_se) {
        const auto se = standard_errors(cat, log_nu, rep.params, rep.fixed);
        rep.se = se.se;
        rep.se_available = se.available;
        rep.covariance = se.covariance;
    }
    rep.h = default_bandwidth(cat);
    finalize_report(rep, cat);
    rep.dof_kde = 0.0;
    const double k = static_cast<double>(rep.free_parameters());
    const auto n = static_cast<double>(cat.size());
    rep.aicc = n > k + 1.0 ? aicc(rep.loglik, k, n) : std::nan("");
    return rep;
}

void print_summary(const FitReport& rep) {
    const auto v = rep.params.to_array();
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        std::fprintf(stderr, "  %-10s %.6g", std::string(RetasParams::kNames[k]).c_str(), v[k]);
        if (rep.se_available[k]) {
            std::fprintf(stderr, "  (se %.3g)", rep.se[k]);
        }
        std::fputc('\n', stderr);
    }
    std::fprintf(stderr, "  loglik %.6f  dof %.3f  aicc %.4f  iterations %zu%s\n", rep.loglik, rep.dof_kde,
                 rep.aicc, rep.iterations, rep.converged ? "" : "  (not converged)");
}

int cmd_fit(const Common& c, const std::string& catalog_path, bool fix_kappa) {
    RunConfig cfg = resolve(c);
    if (fix_kappa) {
        cfg.optimizer.fixed[0] = true;
        RetasParams p = cfg.params_or_default();
        if (cfg.params) {
            p.kappa = 1.0;
            cfg.params = p;
        }
    }
    const fs::path out = prepare_out(c.out);
    write_provenance(out, "fit", cfg, {catalog_path});
    const Catalog cat = read_catalog(catalog_path, cfg);
    SemiparametricConfig sc = cfg.semiparametric_config();
    if (fix_kappa && !cfg.params) {
        RetasParams init = telescoping_init(cat, cfg.optimizer);
        init.beta *= init.kappa;
        init.kappa = 1.0;
        sc.init = init;
    }
    FitReport rep;
    try {
        rep = cfg.parametric_background ? parametric_fit(cat, cfg) : semiparametric_fit(cat, cfg.zeta.front(), sc);
    } catch (const NumericalError& e) {
        write_json(out / "report.json", {{"schema_version", kReportSchemaVersion}, {"error", e.what()}});
        throw;
    }
    write_fit_outputs(out, "", rep, cat, cfg, !cfg.parametric_background);
    print_summary(rep);
    return rep.converged ? 0 : 3;
}

int cmd_select(const Common& c, const std::string& catalog_path) {
    const RunConfig cfg = resolve(c);
    const fs::path out = prepare_out(c.out);
    write_provenance(out, "select", cfg, {catalog_path});
    const Catalog cat = read_catalog(catalog_path, cfg);
    const auto sel = select_smoothing(cat, cfg.zeta, cfg.semiparametric_config());
    auto table = open_out(out / "aicc.csv");
    table << "zeta,kappa,beta,p,c,sigma1_sq,sigma2_sq,A,alpha,loglik,dof,aicc,status\n";
    json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["best_zeta"] = sel.best_zeta;
    doc["fits"] = json::array();
    for (std::size_t i = 0; i < sel.zetas.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "zeta_%g_", sel.zetas[i]);
        table << fmt17(sel.zetas[i]);
        if (sel.reports[i]) {
            const FitReport& r = *sel.reports[i];
            write_fit_outputs(out, stem, r, cat, cfg, true);
            for (double v : r.params.to_array()) {
                table << ',' << fmt17(v);
            }
            table << ',' << fmt17(r.loglik) << ',' << fmt17(r.dof_kde) << ',' << fmt17(r.aicc) << ','
                  << (i == sel.best ? "selected" : "ok") << '\n';
            doc["fits"].push_back({{"zeta", sel.zetas[i]},
                                   {"loglik", number_to_json(r.loglik)},
                                   {"dof", number_to_json(r.dof_kde)},
                                   {"aicc", number_to_json(r.aicc)},
                                   {"report", std::string(stem) + "report.json"}});
        } else {
            table << ",,,,,,,,,,,,failed\n";
            doc["fits"].push_back({{"zeta", sel.zetas[i]}, {"error", sel.errors[i]}});
        }
    }
    write_json(out / "selection.json", doc);
    std::cerr << "selected zeta = " << sel.best_zeta << '\n';
    return 0;
}

// ---------------------------------------------------------------------------------------

std::vector<std::size_t> read_true_labels(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read labels file " + path);
    }
    std::string line;
    std::getline(in, line);
    std::vector<std::size_t> labels;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string idx, parent;
        std::getline(ss, idx, ',');
        std::getline(ss, parent, ',');
        if (parent == "external") {
            labels.push_back(kExternalParent);
        } else {
            const long v = std::stol(parent);
            labels.push_back(v < 0 ? 0 : static_cast<std::size_t>(v) + 1);
        }
    }
    if (labels.size() != n) {
        throw DataError("labels file has " + std::to_string(labels.size()) + " rows, catalog has " +
                        std::to_string(n));
    }
    return labels;
}

int cmd_decluster(const Common& c, const std::string& catalog_path, const std::string& report_path,
                  const std::string& mode, const std::string& labels_path) {
    const RunConfig cfg = resolve(c);
    if (mode != "smoothed" && mode != "filtered" && mode != "etas") {
        throw std::invalid_argument("--mode must be smoothed, filtered or etas");
    }
    const fs::path out = prepare_out(c.out);
    write_provenance(out, "decluster", cfg, {catalog_path, report_path});
    const Catalog cat = read_catalog(catalog_path, cfg);
    std::ifstream rin(report_path);
    if (!rin) {
        throw DataError("cannot read report " + report_path);
    }
    const json rdoc = json::parse(rin, nullptr, false);
    if (rdoc.is_discarded()) {
        throw DataError("report is not valid JSON: " + report_path);
    }
    const SavedFit fit = saved_fit_from_json(rdoc);
    if (fit.n != cat.size()) {
        throw DataError("report was fitted to " + std::to_string(fit.n) + " events, catalog has " +
                        std::to_string(cat.size()));
    }
    if (mode == "etas" && fit.params.kappa != 1.0) {
        throw std::invalid_argument("--mode etas needs a report fitted with kappa fixed at 1 (fit --fix-kappa)");
    }
    const FilterState st = forward_filter(cat, fit.params, fit.log_nu);
    DeclusterResult res;
    if (mode == "smoothed") {
        const auto lf = backward_messages(st);
        const auto q = smooth_q(st, lf);
        res = decluster_smoothed(st, lf, q, cat, fit.params);
    } else {
        res = decluster_filtered(st, cat, fit.params);
    }
    const std::size_t n = res.size();
    {
        auto f = open_out(out / "omega.csv");
        f << "index,value\n";
        for (std::size_t i = 0; i < n; ++i) {
            f << i << ',' << fmt17(res.omega[i]) << '\n';
        }
    }
    {
        auto f = open_out(out / "pi.csv");
        f << "i,j,value\n";
        for (std::size_t r = 1; r < n; ++r) {
            for (std::size_t j = 0; j < r; ++j) {
                if (res.pi(r, j) > 1e-12) {
                    f << r << ',' << j << ',' << fmt17(res.pi(r, j)) << '\n';
                }
            }
        }
    }
    {
        auto f = open_out(out / "q.csv");
        f << "i,j,value\n";
        for (std::size_t r = 1; r < n; ++r) {
            for (std::size_t j = 0; j < r; ++j) {
                f << r << ',' << j << ',' << fmt17(res.q(r, j)) << '\n';
            }
        }
    }
    const auto labels = most_probable_labels(res);
    std::size_t map_main = 0, thr_main = 0;
    {
        auto f = open_out(out / "labels.csv");
        f << "index,parent\n";
        for (std::size_t i = 0; i < n; ++i) {
            f << i << ',' << (labels[i] == 0 ? -1L : static_cast<long>(labels[i] - 1)) << '\n';
            map_main += labels[i] == 0 ? 1 : 0;
            thr_main += res.omega[i] > 0.5 ? 1 : 0;
        }
    }
    {
        auto f = open_out(out / "clusters.csv");
        f << "root,size,generations\n";
        for (const auto& cl : cluster_report(labels)) {
            f << cl.root << ',' << cl.size << ',' << cl.generations << '\n';
        }
    }
    {
        constexpr int bins = 20;
        std::vector<std::size_t> hist(bins, 0);
        for (double w : res.omega) {
            hist[std::min(bins - 1, static_cast<int>(w * bins))] += 1;
        }
        auto f = open_out(out / "omega_hist.csv");
        f << "lower,upper,count\n";
        for (int b = 0; b < bins; ++b) {
            f << fmt17(b / double(bins)) << ',' << fmt17((b + 1) / double(bins)) << ',' << hist[b] << '\n';
        }
    }
    if (!labels_path.empty()) {
        const auto truth = read_true_labels(labels_path, n);
        std::vector<double> scores(res.omega.begin() + 1, res.omega.end());
        std::vector<char> pos;
        for (std::size_t i = 1; i < n; ++i) {
            pos.push_back(truth[i] == 0 ? 1 : 0);
        }
        const auto roc = roc_auc(scores, pos);
        auto f = open_out(out / "roc.csv");
        f << "fpr,tpr\n";
        for (const auto& p : roc.points) {
            f << fmt17(p.fpr) << ',' << fmt17(p.tpr) << '\n';
        }
        std::fprintf(stderr, "AUC %.4f  branching accuracy %.4f\n", roc.auc, branching_accuracy(labels, truth));
    }
    std::fprintf(stderr, "main-shocks: %zu by MAP (%.2f%%), %zu with omega > 0.5 (%.2f%%)\n", map_main,
                 100.0 * map_main / n, thr_main, 100.0 * thr_main / n);
    return 0;
}

// ---------------------------------------------------------------------------------------

int cmd_evaluate(const Common& c) {
    const RunConfig cfg = resolve(c);
    const StudyConfig sc = cfg.study_config();
    const fs::path out = prepare_out(c.out);
    write_provenance(out, "evaluate", cfg, {});
    const fs::path log = out / "replicates.jsonl";
    std::vector<ReplicateResult> done;
    for (auto& r : read_replicates(log)) {
        if (r.index < sc.replicates && (r.ok || !c.retry_failed)) {
            done.push_back(std::move(r));
        }
    }
    if (!done.empty()) {
        std::cerr << "resuming: " << done.size() << " replicates already done\n";
    }
    std::ofstream append(log, std::ios::app);
    if (!append) {
        throw DataError("cannot write " + log.string());
    }
    const StudyResult res = run_study(
        sc,
        [&](const ReplicateResult& r) {
            append << replicate_to_json(r).dump() << '\n' << std::flush;
            std::fprintf(stderr, "replicate %zu: n=%zu %s %.1fs\n", r.index, r.n, r.ok ? "ok" : r.error.c_str(),
                         r.seconds);
        },
        cfg.threads.value_or(1), done);
    write_json(out / "summary.json", study_summary_to_json(sc, res));
    auto table = open_out(out / "table.csv");
    table << "parameter,truth,est,sd,mean_se,cp\n";
    const auto truth = sc.sim.params.to_array();
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        table << RetasParams::kNames[k] << ',' << fmt17(truth[k]) << ',' << fmt17(res.aggregate.est[k]) << ','
              << fmt17(res.aggregate.sd[k]) << ',' << fmt17(res.aggregate.mean_se[k]) << ','
              << fmt17(res.aggregate.cp[k]) << '\n';
    }
    auto raw = open_out(out / "replicates.csv");
    raw << "index,n,ok,kept,kappa,beta,p,c,sigma1_sq,sigma2_sq,A,alpha,loglik,auc_smoothed,auc_filtered,auc_etas,"
           "accuracy_smoothed,accuracy_filtered,accuracy_etas,selected_zeta\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
    for (const auto& r : res.replicates) {
        raw << r.index << ',' << r.n << ',' << r.ok << ',' << int(res.trim.keep[r.index]);
        for (double v : r.estimate.to_array()) {
            raw << ',' << fmt17(v);
        }
        raw << ',' << fmt17(r.loglik) << ',' << opt(r.auc_smoothed) << ',' << opt(r.auc_filtered) << ','
            << opt(r.auc_etas) << ',' << opt(r.accuracy_smoothed) << ',' << opt(r.accuracy_filtered) << ','
            << opt(r.accuracy_etas) << ',' << (r.per_zeta.empty() ? "" : fmt17(r.per_zeta[r.selected].zeta))
            << '\n';
    }
    std::cerr << "study finished: " << res.aggregate.count << " kept, " << res.failures << " failed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RETAS earthquake point-process toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common common;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "random seed (overrides the config)");
        sub->add_option("--threads", threads, "worker threads (overrides RETAS_THREADS and the config)");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--zeta", common.zeta, "comma-separated bandwidth multipliers");
        sub->add_option("--columns", common.columns, "column remap, e.g. time=origintime,x=longitude");
    };
    std::string catalog_path, report_path, mode = "smoothed", labels_path;
    bool fix_kappa = false;

    auto* sim = app.add_subcommand("simulate", "simulate catalogs with true branching labels");
    add_common(sim);
    auto* fit = app.add_subcommand("fit", "fit the model to a catalog");
    add_common(fit);
    fit->add_option("catalog", catalog_path, "catalog CSV")->required();
    fit->add_flag("--fix-kappa", fix_kappa, "hold kappa at 1 (the ETAS special case)");
    auto* dec = app.add_subcommand("decluster", "branching-structure probabilities from a fit report");
    add_common(dec);
    dec->add_option("catalog", catalog_path, "catalog CSV")->required();
    dec->add_option("report", report_path, "report.json from fit")->required();
    dec->add_option("--mode", mode, "smoothed, filtered or etas");
    dec->add_option("--labels", labels_path, "true labels CSV from simulate, for ROC output");
    auto* sel = app.add_subcommand("select", "choose the bandwidth multiplier by AICc");
    add_common(sel);
    sel->add_option("catalog", catalog_path, "catalog CSV")->required();
    auto* ev = app.add_subcommand("evaluate", "Monte-Carlo study (resumes from replicates.jsonl)");
    add_common(ev);
    ev->add_flag("--retry-failed", common.retry_failed, "rerun replicates recorded as failed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    common.seed = seed;
    common.threads = threads;
    try {
        if (*sim) {
            return cmd_simulate(common);
        }
        if (*fit) {
            return cmd_fit(common, catalog_path, fix_kappa);
        }
        if (*dec) {
            return cmd_decluster(common, catalog_path, report_path, mode, labels_path);
        }
        if (*sel) {
            return cmd_select(common, catalog_path);
        }
        return cmd_evaluate(common);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
