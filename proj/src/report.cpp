#include "retas/report.hpp"

#include "retas/errors.hpp"
#include "retas/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

namespace retas {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json number_to_json(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_from_json(const json& v) {
    return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

json params_to_json(const RetasParams& params) {
    json out = json::object();
    const auto v = params.to_array();
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        out[std::string(RetasParams::kNames[k])] = number_to_json(v[k]);
    }
    return out;
}

RetasParams params_from_json(const json& doc) {
    std::array<double, RetasParams::kCount> v{};
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        const std::string name(RetasParams::kNames[k]);
        if (!doc.is_object() || !doc.contains(name)) {
            throw DataError("report: missing parameter '" + name + "'");
        }
        v[k] = number_from_json(doc[name]);
    }
    return RetasParams::from_array(v);
}

namespace {

template <std::size_t N>
json array_json(const std::array<double, N>& a) {
    json out = json::array();
    for (double v : a) {
        out.push_back(number_to_json(v));
    }
    return out;
}

template <std::size_t N>
std::array<double, N> array_from(const json& j) {
    std::array<double, N> a{};
    for (std::size_t k = 0; k < N && k < j.size(); ++k) {
        a[k] = number_from_json(j[k]);
    }
    return a;
}

json vector_json(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) {
        out.push_back(number_to_json(x));
    }
    return out;
}

json optional_json(const std::optional<double>& v) {
    return v ? number_to_json(*v) : json(nullptr);
}

std::optional<double> optional_from(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_number()) {
        return std::nullopt;
    }
    return doc[key].get<double>();
}

} // namespace

json fit_report_to_json(const FitReport& r, std::size_t n_events) {
    json out;
    out["schema_version"] = kReportSchemaVersion;
    out["n"] = n_events;
    out["params"] = params_to_json(r.params);
    json se = json::object();
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        se[std::string(RetasParams::kNames[k])] = r.se_available[k] ? number_to_json(r.se[k]) : json(nullptr);
    }
    out["se"] = se;
    json cov = json::array();
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < r.covariance.cols(); ++j) {
            row.push_back(number_to_json(r.covariance(i, j)));
        }
        cov.push_back(row);
    }
    out["covariance"] = cov;
    std::vector<std::string> fixed;
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        if (r.fixed[k]) {
            fixed.emplace_back(RetasParams::kNames[k]);
        }
    }
    out["fixed"] = fixed;
    out["loglik"] = number_to_json(r.loglik);
    out["magnitude"] = {{"gamma", number_to_json(r.mag.gamma)},
                        {"mean_excess", number_to_json(1.0 / r.mag.gamma)},
                        {"m0", r.mag.m0},
                        {"loglik", number_to_json(r.mag_loglik)}};
    out["dof_kde"] = number_to_json(r.dof_kde);
    out["free_parameters"] = r.free_parameters();
    out["aicc"] = number_to_json(r.aicc);
    out["productivity"] = number_to_json(r.productivity);
    out["supercritical"] = r.supercritical;
    out["pct_mainshocks"] = number_to_json(r.pct_mainshocks);
    out["iterations"] = r.iterations;
    out["converged"] = r.converged;
    out["zeta"] = r.zeta;
    out["bandwidth"] = {{"h11", r.h.h11}, {"h12", r.h.h12}, {"h22", r.h.h22}};
    out["trajectory"] = vector_json(r.trajectory);
    out["warnings"] = r.warnings;
    std::optional<Eigen::Matrix2d> kb;
    if (r.se_available[0] && r.se_available[1]) {
        kb = r.covariance.topLeftCorner<2, 2>();
    }
    const auto w = waiting_time_summary(r.params, kb);
    out["waiting_time"] = {{"mean", number_to_json(w.mean)},
                           {"sd", number_to_json(w.sd)},
                           {"se_mean", optional_json(w.se_mean)},
                           {"se_sd", optional_json(w.se_sd)}};
    out["omega"] = vector_json(r.omega);
    out["log_nu"] = vector_json(r.log_nu);
    return out;
}

SavedFit saved_fit_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("schema_version")) {
        throw DataError("report: not a fit report");
    }
    if (doc["schema_version"].get<int>() != kReportSchemaVersion) {
        throw DataError("report: unsupported schema version");
    }
    SavedFit out;
    out.params = params_from_json(doc.at("params"));
    out.n = doc.at("n").get<std::size_t>();
    for (const auto& v : doc.at("log_nu")) {
        out.log_nu.push_back(v.is_number() ? v.get<double>() : -std::numeric_limits<double>::infinity());
    }
    if (out.log_nu.size() != out.n) {
        throw DataError("report: background values do not match the event count");
    }
    return out;
}

json replicate_to_json(const ReplicateResult& r) {
    json out;
    out["index"] = r.index;
    out["n"] = r.n;
    out["ok"] = r.ok;
    out["error"] = r.error;
    out["estimate"] = params_to_json(r.estimate);
    out["se"] = array_json(r.se);
    json avail = json::array();
    for (bool b : r.se_available) {
        avail.push_back(b);
    }
    out["se_available"] = avail;
    out["loglik"] = number_to_json(r.loglik);
    out["converged"] = r.converged;
    json pz = json::array();
    for (const auto& z : r.per_zeta) {
        pz.push_back({{"zeta", z.zeta},
                      {"params", params_to_json(z.params)},
                      {"loglik", number_to_json(z.loglik)},
                      {"dof", number_to_json(z.dof)},
                      {"aicc", number_to_json(z.aicc)},
                      {"converged", z.converged}});
    }
    out["per_zeta"] = pz;
    out["selected"] = r.selected;
    out["auc_smoothed"] = optional_json(r.auc_smoothed);
    out["auc_filtered"] = optional_json(r.auc_filtered);
    out["auc_etas"] = optional_json(r.auc_etas);
    out["accuracy_smoothed"] = optional_json(r.accuracy_smoothed);
    out["accuracy_filtered"] = optional_json(r.accuracy_filtered);
    out["accuracy_etas"] = optional_json(r.accuracy_etas);
    out["seconds"] = r.seconds;
    return out;
}

ReplicateResult replicate_from_json(const json& doc) {
    ReplicateResult r;
    try {
        r.index = doc.at("index").get<std::size_t>();
        r.n = doc.at("n").get<std::size_t>();
        r.ok = doc.at("ok").get<bool>();
        r.error = doc.value("error", "");
        if (r.ok) {
            r.estimate = params_from_json(doc.at("estimate"));
        }
        r.se = array_from<RetasParams::kCount>(doc.at("se"));
        const auto& avail = doc.at("se_available");
        for (std::size_t k = 0; k < RetasParams::kCount && k < avail.size(); ++k) {
            r.se_available[k] = avail[k].get<bool>();
        }
        r.loglik = number_from_json(doc.at("loglik"));
        r.converged = doc.at("converged").get<bool>();
        for (const auto& z : doc.at("per_zeta")) {
            r.per_zeta.push_back({z.at("zeta").get<double>(), params_from_json(z.at("params")),
                                  number_from_json(z.at("loglik")), number_from_json(z.at("dof")),
                                  number_from_json(z.at("aicc")), z.at("converged").get<bool>()});
        }
        r.selected = doc.at("selected").get<std::size_t>();
        r.auc_smoothed = optional_from(doc, "auc_smoothed");
        r.auc_filtered = optional_from(doc, "auc_filtered");
        r.auc_etas = optional_from(doc, "auc_etas");
        r.accuracy_smoothed = optional_from(doc, "accuracy_smoothed");
        r.accuracy_filtered = optional_from(doc, "accuracy_filtered");
        r.accuracy_etas = optional_from(doc, "accuracy_etas");
        r.seconds = doc.value("seconds", 0.0);
    } catch (const json::exception& e) {
        throw DataError(std::string("replicate record: ") + e.what());
    }
    return r;
}

std::vector<ReplicateResult> read_replicates(const std::filesystem::path& path) {
    std::vector<ReplicateResult> out;
    std::ifstream in(path);
    if (!in) {
        return out;
    }
    std::map<std::size_t, ReplicateResult> by_index;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) {
            continue;
        }
        ReplicateResult r = replicate_from_json(doc);
        by_index[r.index] = std::move(r);
    }
    for (auto& [i, r] : by_index) {
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

struct Mean {
    double sum = 0.0;
    std::size_t count = 0;
    void add(const std::optional<double>& v) {
        if (v && std::isfinite(*v)) {
            sum += *v;
            ++count;
        }
    }
    [[nodiscard]] json value() const { return count ? json(sum / static_cast<double>(count)) : json(nullptr); }
};

} // namespace

json study_summary_to_json(const StudyConfig& cfg, const StudyResult& res) {
    json out;
    out["schema_version"] = kReportSchemaVersion;
    out["truth"] = params_to_json(cfg.sim.params);
    out["replicates"] = res.replicates.size();
    out["failures"] = res.failures;
    out["kept"] = res.aggregate.count;
    out["trim_diagonal_fallback"] = res.trim.diagonal_fallback;
    json table = json::object();
    for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
        table[std::string(RetasParams::kNames[k])] = {{"est", number_to_json(res.aggregate.est[k])},
                                                      {"sd", number_to_json(res.aggregate.sd[k])},
                                                      {"mean_se", number_to_json(res.aggregate.mean_se[k])},
                                                      {"cp", number_to_json(res.aggregate.cp[k])}};
    }
    out["table"] = table;

    Mean auc_s, auc_f, auc_e, acc_s, acc_f, acc_e;
    std::map<double, std::pair<Mean, std::size_t>> dof; // zeta -> (mean dof, times selected)
    std::map<double, std::array<Mean, RetasParams::kCount>> zeta_est;
    for (const auto& r : res.replicates) {
        if (!r.ok) {
            continue;
        }
        auc_s.add(r.auc_smoothed);
        auc_f.add(r.auc_filtered);
        auc_e.add(r.auc_etas);
        acc_s.add(r.accuracy_smoothed);
        acc_f.add(r.accuracy_filtered);
        acc_e.add(r.accuracy_etas);
        for (std::size_t z = 0; z < r.per_zeta.size(); ++z) {
            const auto& pz = r.per_zeta[z];
            dof[pz.zeta].first.add(pz.dof);
            if (z == r.selected) {
                ++dof[pz.zeta].second;
            }
            const auto v = pz.params.to_array();
            for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
                zeta_est[pz.zeta][k].add(v[k]);
            }
        }
    }
    out["auc"] = {{"smoothed", auc_s.value()}, {"filtered", auc_f.value()}, {"etas", auc_e.value()}};
    out["accuracy"] = {{"smoothed", acc_s.value()}, {"filtered", acc_f.value()}, {"etas", acc_e.value()}};
    json pz = json::array();
    for (const auto& [z, d] : dof) {
        json est = json::object();
        for (std::size_t k = 0; k < RetasParams::kCount; ++k) {
            est[std::string(RetasParams::kNames[k])] = zeta_est[z][k].value();
        }
        pz.push_back({{"zeta", z}, {"mean_dof", d.first.value()}, {"selected", d.second}, {"mean_estimate", est}});
    }
    out["per_zeta"] = pz;
    return out;
}

} // namespace retas
