#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gprism/ingest/csv.hpp"
#include "gprism/pipeline.hpp"

namespace gprism {

inline constexpr int kReportSchemaVersion = 1;

/// One row per prediction:
///   variant,timestamp,target_timestamp,horizon,y_true,y_pred,lambda,nnz
/// `timestamp` is the prediction time i, `target_timestamp` is i + horizon.
[[nodiscard]] inline std::string predictions_csv(const std::vector<BacktestReport>& reports, Frequency freq) {
    std::string out = "variant,timestamp,target_timestamp,horizon,y_true,y_pred,lambda,nnz\n";
    for (const auto& rep : reports) {
        for (const auto& h : rep.horizons) {
            for (const auto& r : h.records) {
                out += csv::join({std::string(to_string(rep.variant)), r.timestamp.to_string(),
                                  advance(r.timestamp, freq, static_cast<std::int64_t>(h.horizon)).to_string(),
                                  std::to_string(h.horizon), csv::format_double(r.y_true),
                                  csv::format_double(r.y_pred), csv::format_double(r.lambda),
                                  std::to_string(r.nonzero_count)});
                out += '\n';
            }
        }
    }
    return out;
}

/// Actual and predicted values for one horizon, indexed by the predicted period:
///   variant,timestamp,actual,predicted
[[nodiscard]] inline std::string plot_csv(const std::vector<BacktestReport>& reports, std::size_t horizon,
                                          Frequency freq) {
    std::string out = "variant,timestamp,actual,predicted\n";
    for (const auto& rep : reports) {
        for (const auto& h : rep.horizons) {
            if (h.horizon != horizon) continue;
            for (const auto& r : h.records) {
                out += csv::join({std::string(to_string(rep.variant)),
                                  advance(r.timestamp, freq, static_cast<std::int64_t>(h.horizon)).to_string(),
                                  csv::format_double(r.y_true), csv::format_double(r.y_pred)});
                out += '\n';
            }
        }
    }
    return out;
}

/// Metric tables laid out horizon x variant:
///   {"schema_version":1, "seed":.., "evaluation":{"start","end"}, "variants":[..],
///    "horizons":[..], "rmse":{"<h>":{"<variant>":..}}, "mae":{..}, "n_test":{..}, "n_skipped":{..}}
[[nodiscard]] inline nlohmann::ordered_json summary_json(const std::vector<BacktestReport>& reports,
                                                         EvaluationSpan span, std::uint64_t seed) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["seed"] = seed;
    j["evaluation"] = {{"start", span.start.to_string()}, {"end", span.end.to_string()}};
    ordered_json variants = ordered_json::array(), horizons = ordered_json::array();
    for (const auto& rep : reports) variants.push_back(std::string(to_string(rep.variant)));
    if (!reports.empty())
        for (const auto& h : reports.front().horizons) horizons.push_back(h.horizon);
    j["variants"] = variants;
    j["horizons"] = horizons;
    for (const char* metric : {"rmse", "mae", "n_test", "n_skipped"}) {
        ordered_json table = ordered_json::object();
        if (!reports.empty()) {
            for (std::size_t k = 0; k < reports.front().horizons.size(); ++k) {
                ordered_json row = ordered_json::object();
                for (const auto& rep : reports) {
                    const auto& h = rep.horizons[k];
                    const std::string m = metric;
                    const std::string v(to_string(rep.variant));
                    if (m == "rmse") row[v] = h.rmse;
                    else if (m == "mae") row[v] = h.mae;
                    else if (m == "n_test") row[v] = h.n_test;
                    else row[v] = h.n_skipped;
                }
                table[std::to_string(reports.front().horizons[k].horizon)] = row;
            }
        }
        j[metric] = table;
    }
    return j;
}

}  // namespace gprism
