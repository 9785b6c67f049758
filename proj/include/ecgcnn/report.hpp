#pragma once

// Emission of run artifacts: history CSV, sweep CSV, report JSON and the
// bounds sidecar. Formatting is pinned (fixed decimal places, fixed key
// order) so reruns of the same experiment produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "ecgcnn/errors.hpp"
#include "ecgcnn/metrics.hpp"
#include "ecgcnn/raster.hpp"
#include "ecgcnn/trainer.hpp"

namespace ecgcnn {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline std::string fmt(const char* format, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, value);
    return buf;
}

} // namespace detail

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open file for writing: " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

inline std::string history_csv(const TrainHistory& history) {
    std::string out = "iteration,train_loss,test_accuracy\n";
    for (const HistoryPoint& p : history)
        out += std::to_string(p.iteration) + "," + detail::fmt("%.6f", p.train_loss) + "," +
               detail::fmt("%.4f", p.test_accuracy) + "\n";
    return out;
}

/// Sweep rows as "model,snr_db,sensitivity,specificity,accuracy" with the
/// clean condition printed as "none" and percentages at two decimals.
inline std::string sweep_csv(std::span<const MetricsReport> reports) {
    auto cell = [](const std::optional<double>& v) { return v ? detail::fmt("%.2f", *v) : "NA"; };
    std::string out = "model,snr_db,sensitivity,specificity,accuracy\n";
    for (const MetricsReport& r : reports)
        out += r.model + "," + (r.snr_db ? detail::fmt("%g", *r.snr_db) : "none") + "," +
               cell(r.sensitivity) + "," + cell(r.specificity) + "," + cell(r.accuracy) + "\n";
    return out;
}

inline ordered_json metrics_json(const MetricsReport& r) {
    ordered_json j;
    if (r.fold >= 0) j["fold"] = r.fold;
    j["sensitivity"] = r.sensitivity ? ordered_json(*r.sensitivity) : ordered_json(nullptr);
    j["specificity"] = r.specificity ? ordered_json(*r.specificity) : ordered_json(nullptr);
    j["accuracy"] = r.accuracy ? ordered_json(*r.accuracy) : ordered_json(nullptr);
    j["tp"] = r.matrix.tp;
    j["tn"] = r.matrix.tn;
    j["fp"] = r.matrix.fp;
    j["fn"] = r.matrix.fn;
    return j;
}

inline ordered_json experiment_report_json(const ExperimentResult& result,
                                           const ordered_json& resolved_config) {
    ordered_json j;
    j["model"] = result.mean_report.model;
    j["folds"] = ordered_json::array();
    for (const MetricsReport& r : result.fold_reports) j["folds"].push_back(metrics_json(r));
    j["mean"] = metrics_json(result.mean_report);
    j["config"] = resolved_config;
    return j;
}

inline ordered_json bounds_json(const AxisBounds& bounds) {
    ordered_json j;
    j["lo_mv"] = bounds.lo;
    j["hi_mv"] = bounds.hi;
    return j;
}

inline ordered_json sweep_json(std::span<const MetricsReport> reports) {
    ordered_json rows = ordered_json::array();
    for (const MetricsReport& r : reports) {
        ordered_json row = metrics_json(r);
        row["model"] = r.model;
        row["snr_db"] = r.snr_db ? ordered_json(*r.snr_db) : ordered_json(nullptr);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace ecgcnn
