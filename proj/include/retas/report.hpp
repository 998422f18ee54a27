#pragma once

#include "retas/estimation.hpp"
#include "retas/evaluation.hpp"
#include "retas/smoother.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace retas {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json params_to_json(const RetasParams& params);
/// Throws DataError when a parameter is missing.
RetasParams params_from_json(const nlohmann::json& doc);

/// Non-finite doubles become null; null reads back as NaN.
nlohmann::json number_to_json(double v);
double number_from_json(const nlohmann::json& v);

nlohmann::json fit_report_to_json(const FitReport& report, std::size_t n_events);

/// Fitted quantities needed to decluster a catalog from a saved report.
struct SavedFit {
    RetasParams params;
    std::vector<double> log_nu;
    std::size_t n = 0;
};
SavedFit saved_fit_from_json(const nlohmann::json& doc);

nlohmann::json replicate_to_json(const ReplicateResult& r);
ReplicateResult replicate_from_json(const nlohmann::json& doc);

/// Reads a file with one replicate JSON object per line; blank or truncated lines are skipped.
std::vector<ReplicateResult> read_replicates(const std::filesystem::path& path);

/// Aggregates plus mean AUC, accuracy and per-zeta summaries where present.
nlohmann::json study_summary_to_json(const StudyConfig& cfg, const StudyResult& result);

/// `%.17g` rendering used by every CSV writer.
std::string fmt17(double v);

} // namespace retas
