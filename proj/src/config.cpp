#include "retas/config.hpp"

#include "retas/errors.hpp"

#include <fstream>
#include <set>

namespace retas {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw DataError("config: '" + where + "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw DataError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw DataError("config: bad value for '" + where + "." + key + "'");
    }
}

double read_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj.at(key).is_number()) {
        throw DataError("config: '" + where + "." + key + "' must be a number");
    }
    return obj.at(key).get<double>();
}

SpatialWindow read_window(const json& w, const std::string& where) {
    check_keys(w, {"x_min", "x_max", "y_min", "y_max"}, where);
    try {
        return SpatialWindow::rectangle(read_number(w, "x_min", where), read_number(w, "x_max", where),
                                        read_number(w, "y_min", where), read_number(w, "y_max", where));
    } catch (const std::invalid_argument& e) {
        throw DataError("config: " + where + ": " + e.what());
    }
}

json window_json(const SpatialWindow& w) {
    if (w.is_whole_plane()) {
        return nullptr;
    }
    return {{"x_min", w.x_min}, {"x_max", w.x_max}, {"y_min", w.y_min}, {"y_max", w.y_max}};
}

void drop_nulls(json& doc) {
    for (auto it = doc.begin(); it != doc.end();) {
        if (it->is_null()) {
            it = doc.erase(it);
        } else {
            if (it->is_object()) {
                drop_nulls(*it);
            }
            ++it;
        }
    }
}

const char* algorithm_name(OptimizerAlgorithm a) {
    switch (a) {
    case OptimizerAlgorithm::NelderMead: return "nelder_mead";
    case OptimizerAlgorithm::QuasiNewtonNumericGrad: return "quasi_newton";
    case OptimizerAlgorithm::NelderMeadThenQuasiNewton: return "nelder_mead_then_quasi_newton";
    }
    return "";
}

const char* mode_name(StudyFitMode m) {
    switch (m) {
    case StudyFitMode::KnownBackground: return "known";
    case StudyFitMode::Semiparametric: return "semiparametric";
    case StudyFitMode::AiccSelected: return "aicc";
    }
    return "";
}

} // namespace

RetasParams RunConfig::params_or_default() const {
    return params ? *params : study_sim_config(sim_T).params;
}

SimConfig RunConfig::sim_config() const {
    SimConfig sc;
    sc.params = params_or_default();
    sc.mag = magnitude;
    sc.nu_mean_x = nu_mean_x;
    sc.nu_mean_y = nu_mean_y;
    sc.nu_var_x = nu_var_x;
    sc.nu_var_y = nu_var_y;
    sc.T = sim_T;
    sc.seed = seed;
    sc.window = sim_window;
    sc.max_events = sim_max_events;
    return sc;
}

SemiparametricConfig RunConfig::semiparametric_config() const {
    SemiparametricConfig sc;
    sc.optimizer = optimizer;
    sc.tol = fit_tol;
    sc.max_iter = fit_max_iter;
    sc.min_iter = fit_min_iter;
    sc.bandwidth = bandwidth;
    sc.init = params;
    sc.compute_se = compute_se;
    return sc;
}

StudyConfig RunConfig::study_config() const {
    StudyConfig sc;
    sc.sim = sim_config();
    sc.fit_mode = study_mode;
    sc.zeta = study_zeta;
    sc.zeta_grid = study_zeta_grid;
    sc.replicates = study_replicates;
    sc.optimizer = optimizer;
    sc.tol = study_tol;
    sc.compute_se = study_compute_se;
    sc.decluster = study_decluster;
    sc.trim_frac = study_trim_frac;
    return sc;
}

BackgroundIntensity RunConfig::parametric_nu() const {
    return BackgroundIntensity::parametric(nu_mean_x, nu_mean_y, nu_var_x, nu_var_y);
}

RunConfig parse_run_config(const json& doc) {
    RunConfig cfg;
    check_keys(doc, {"seed", "threads", "params", "magnitude", "background", "zeta", "bandwidth", "optimizer", "fit",
                     "catalog", "simulation", "study", "grid"},
               "");
    read(doc, "seed", cfg.seed, "");
    if (doc.contains("threads")) {
        unsigned t = 0;
        read(doc, "threads", t, "");
        cfg.threads = t;
    }
    if (doc.contains("params")) {
        const json& p = doc["params"];
        std::set<std::string> names;
        for (auto n : RetasParams::kNames) {
            names.emplace(n);
        }
        check_keys(p, names, "params");
        RetasParams def = study_sim_config(250.0).params;
        auto v = def.to_array();
        for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
            const std::string name(RetasParams::kNames[k]);
            if (p.contains(name)) {
                v[k] = read_number(p, name.c_str(), "params");
            }
        }
        cfg.params = RetasParams::from_array(v);
        try {
            cfg.params->check();
        } catch (const std::domain_error& e) {
            throw DataError(std::string("config: params: ") + e.what());
        }
    }
    if (doc.contains("magnitude")) {
        const json& m = doc["magnitude"];
        check_keys(m, {"gamma", "m0"}, "magnitude");
        read(m, "gamma", cfg.magnitude.gamma, "magnitude");
        read(m, "m0", cfg.magnitude.m0, "magnitude");
        if (!(cfg.magnitude.gamma > 0.0)) {
            throw DataError("config: magnitude.gamma must be positive");
        }
    }
    if (doc.contains("background")) {
        const json& b = doc["background"];
        check_keys(b, {"type", "mean_x", "mean_y", "var_x", "var_y"}, "background");
        std::string type = "kde";
        read(b, "type", type, "background");
        if (type != "kde" && type != "parametric") {
            throw DataError("config: background.type must be 'kde' or 'parametric'");
        }
        cfg.parametric_background = type == "parametric";
        read(b, "mean_x", cfg.nu_mean_x, "background");
        read(b, "mean_y", cfg.nu_mean_y, "background");
        read(b, "var_x", cfg.nu_var_x, "background");
        read(b, "var_y", cfg.nu_var_y, "background");
        if (!(cfg.nu_var_x > 0.0) || !(cfg.nu_var_y > 0.0)) {
            throw DataError("config: background variances must be positive");
        }
    }
    read(doc, "zeta", cfg.zeta, "");
    for (double z : cfg.zeta) {
        if (!(z > 0.0)) {
            throw DataError("config: zeta values must be positive");
        }
    }
    if (doc.contains("bandwidth")) {
        const json& h = doc["bandwidth"];
        check_keys(h, {"h11", "h12", "h22"}, "bandwidth");
        BandwidthMatrix bw{read_number(h, "h11", "bandwidth"), 0.0, read_number(h, "h22", "bandwidth")};
        read(h, "h12", bw.h12, "bandwidth");
        if (!bw.is_positive_definite()) {
            throw DataError("config: bandwidth is not positive definite");
        }
        cfg.bandwidth = bw;
    }
    if (doc.contains("optimizer")) {
        const json& o = doc["optimizer"];
        check_keys(o, {"algorithm", "max_evals", "x_tol", "f_tol", "initial_step", "fixed"}, "optimizer");
        if (o.contains("algorithm")) {
            std::string a;
            read(o, "algorithm", a, "optimizer");
            if (a == "nelder_mead") {
                cfg.optimizer.algorithm = OptimizerAlgorithm::NelderMead;
            } else if (a == "quasi_newton") {
                cfg.optimizer.algorithm = OptimizerAlgorithm::QuasiNewtonNumericGrad;
            } else if (a == "nelder_mead_then_quasi_newton") {
                cfg.optimizer.algorithm = OptimizerAlgorithm::NelderMeadThenQuasiNewton;
            } else {
                throw DataError("config: unknown optimizer.algorithm '" + a + "'");
            }
        }
        read(o, "max_evals", cfg.optimizer.max_evals, "optimizer");
        read(o, "x_tol", cfg.optimizer.x_tol, "optimizer");
        read(o, "f_tol", cfg.optimizer.f_tol, "optimizer");
        read(o, "initial_step", cfg.optimizer.initial_step, "optimizer");
        std::vector<std::string> fixed;
        read(o, "fixed", fixed, "optimizer");
        for (const auto& name : fixed) {
            bool found = false;
            for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
                if (RetasParams::kNames[k] == name) {
                    cfg.optimizer.fixed[k] = true;
                    found = true;
                }
            }
            if (!found) {
                throw DataError("config: unknown parameter in optimizer.fixed: '" + name + "'");
            }
        }
        try {
            cfg.optimizer.check();
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string("config: optimizer: ") + e.what());
        }
    }
    if (doc.contains("fit")) {
        const json& f = doc["fit"];
        check_keys(f, {"tol", "max_iter", "min_iter", "compute_se"}, "fit");
        read(f, "tol", cfg.fit_tol, "fit");
        read(f, "max_iter", cfg.fit_max_iter, "fit");
        read(f, "min_iter", cfg.fit_min_iter, "fit");
        read(f, "compute_se", cfg.compute_se, "fit");
        if (!(cfg.fit_tol > 0.0) || cfg.fit_max_iter == 0) {
            throw DataError("config: fit.tol and fit.max_iter must be positive");
        }
    }
    if (doc.contains("catalog")) {
        const json& c = doc["catalog"];
        check_keys(c, {"columns", "m0", "origin", "end", "wrap_longitude", "window"}, "catalog");
        if (c.contains("columns")) {
            std::string spec;
            read(c, "columns", spec, "catalog");
            try {
                cfg.load.format = CatalogFormat::from_column_map(spec);
            } catch (const std::exception& e) {
                throw DataError(std::string("config: catalog.columns: ") + e.what());
            }
        }
        read(c, "wrap_longitude", cfg.load.format.wrap_longitude, "catalog");
        read(c, "m0", cfg.load.m0, "catalog");
        if (c.contains("origin")) {
            std::string s;
            read(c, "origin", s, "catalog");
            cfg.load.origin = s;
        }
        if (c.contains("end")) {
            std::string s;
            read(c, "end", s, "catalog");
            cfg.load.end = s;
        }
        if (c.contains("window")) {
            cfg.load.window = read_window(c["window"], "catalog.window");
        }
    }
    if (doc.contains("simulation")) {
        const json& s = doc["simulation"];
        check_keys(s, {"T", "nu_mean_x", "nu_mean_y", "nu_var_x", "nu_var_y", "replicates", "max_events", "window"},
                   "simulation");
        read(s, "T", cfg.sim_T, "simulation");
        read(s, "nu_mean_x", cfg.nu_mean_x, "simulation");
        read(s, "nu_mean_y", cfg.nu_mean_y, "simulation");
        read(s, "nu_var_x", cfg.nu_var_x, "simulation");
        read(s, "nu_var_y", cfg.nu_var_y, "simulation");
        read(s, "replicates", cfg.sim_replicates, "simulation");
        read(s, "max_events", cfg.sim_max_events, "simulation");
        if (s.contains("window")) {
            cfg.sim_window = read_window(s["window"], "simulation.window");
        }
        if (!(cfg.sim_T > 0.0) || !(cfg.nu_var_x > 0.0) || !(cfg.nu_var_y > 0.0)) {
            throw DataError("config: simulation.T and variances must be positive");
        }
    }
    if (doc.contains("study")) {
        const json& s = doc["study"];
        check_keys(s, {"fit_mode", "zeta", "zeta_grid", "replicates", "decluster", "trim_frac", "tol", "compute_se"},
                   "study");
        if (s.contains("fit_mode")) {
            std::string m;
            read(s, "fit_mode", m, "study");
            if (m == "known") {
                cfg.study_mode = StudyFitMode::KnownBackground;
            } else if (m == "semiparametric") {
                cfg.study_mode = StudyFitMode::Semiparametric;
            } else if (m == "aicc") {
                cfg.study_mode = StudyFitMode::AiccSelected;
            } else {
                throw DataError("config: unknown study.fit_mode '" + m + "'");
            }
        }
        read(s, "zeta", cfg.study_zeta, "study");
        read(s, "zeta_grid", cfg.study_zeta_grid, "study");
        read(s, "replicates", cfg.study_replicates, "study");
        read(s, "decluster", cfg.study_decluster, "study");
        read(s, "trim_frac", cfg.study_trim_frac, "study");
        read(s, "tol", cfg.study_tol, "study");
        read(s, "compute_se", cfg.study_compute_se, "study");
        if (!(cfg.study_trim_frac >= 0.0 && cfg.study_trim_frac < 1.0)) {
            throw DataError("config: study.trim_frac must lie in [0, 1)");
        }
    }
    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        check_keys(g, {"nx", "ny"}, "grid");
        read(g, "nx", cfg.grid_nx, "grid");
        read(g, "ny", cfg.grid_ny, "grid");
        if (cfg.grid_nx < 2 || cfg.grid_ny < 2) {
            throw DataError("config: grid needs at least 2 points per axis");
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read config file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("config " + path.string() + ": " + e.what());
    }
    return parse_run_config(doc);
}

json to_json(const RunConfig& cfg) {
    json out;
    out["seed"] = cfg.seed;
    out["threads"] = cfg.threads ? json(*cfg.threads) : json(nullptr);
    json params;
    const auto v = cfg.params_or_default().to_array();
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        params[std::string(RetasParams::kNames[k])] = v[k];
    }
    out["params"] = params;
    out["magnitude"] = {{"gamma", cfg.magnitude.gamma}, {"m0", cfg.magnitude.m0}};
    out["background"] = {{"type", cfg.parametric_background ? "parametric" : "kde"},
                         {"mean_x", cfg.nu_mean_x},
                         {"mean_y", cfg.nu_mean_y},
                         {"var_x", cfg.nu_var_x},
                         {"var_y", cfg.nu_var_y}};
    out["zeta"] = cfg.zeta;
    out["bandwidth"] = cfg.bandwidth ? json{{"h11", cfg.bandwidth->h11}, {"h12", cfg.bandwidth->h12},
                                             {"h22", cfg.bandwidth->h22}}
                                     : json(nullptr);
    std::vector<std::string> fixed;
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        if (cfg.optimizer.fixed[k]) {
            fixed.emplace_back(RetasParams::kNames[k]);
        }
    }
    out["optimizer"] = {{"algorithm", algorithm_name(cfg.optimizer.algorithm)},
                        {"max_evals", cfg.optimizer.max_evals},
                        {"x_tol", cfg.optimizer.x_tol},
                        {"f_tol", cfg.optimizer.f_tol},
                        {"initial_step", cfg.optimizer.initial_step},
                        {"fixed", fixed}};
    out["fit"] = {{"tol", cfg.fit_tol},
                  {"max_iter", cfg.fit_max_iter},
                  {"min_iter", cfg.fit_min_iter},
                  {"compute_se", cfg.compute_se}};
    const auto& f = cfg.load.format;
    out["catalog"] = {{"columns", "time=" + f.time_column + ",x=" + f.x_column + ",y=" + f.y_column +
                                      ",magnitude=" + f.magnitude_column},
                      {"m0", cfg.load.m0},
                      {"origin", cfg.load.origin ? json(*cfg.load.origin) : json(nullptr)},
                      {"end", cfg.load.end ? json(*cfg.load.end) : json(nullptr)},
                      {"wrap_longitude", f.wrap_longitude},
                      {"window", window_json(cfg.load.window)}};
    out["simulation"] = {{"T", cfg.sim_T},
                         {"nu_mean_x", cfg.nu_mean_x},
                         {"nu_mean_y", cfg.nu_mean_y},
                         {"nu_var_x", cfg.nu_var_x},
                         {"nu_var_y", cfg.nu_var_y},
                         {"replicates", cfg.sim_replicates},
                         {"max_events", cfg.sim_max_events},
                         {"window", window_json(cfg.sim_window)}};
    out["study"] = {{"fit_mode", mode_name(cfg.study_mode)},
                    {"zeta", cfg.study_zeta},
                    {"zeta_grid", cfg.study_zeta_grid},
                    {"replicates", cfg.study_replicates},
                    {"decluster", cfg.study_decluster},
                    {"trim_frac", cfg.study_trim_frac},
                    {"tol", cfg.study_tol},
                    {"compute_se", cfg.study_compute_se}};
    out["grid"] = {{"nx", cfg.grid_nx}, {"ny", cfg.grid_ny}};
    drop_nulls(out);
    return out;
}

} // namespace retas
