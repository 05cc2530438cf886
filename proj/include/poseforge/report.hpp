#pragma once

// Text tables and JSON for metrics and timing reports.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "poseforge/metrics.hpp"
#include "poseforge/postprocess.hpp"

namespace poseforge {

inline constexpr const char* kRotationRow = "rotation_error_avg (in degrees)";
inline constexpr const char* kTranslationRow = "translation_error_avg (in mm)";
inline constexpr const char* kForwardRow = "Average Forward Time (decode+score analog)";
inline constexpr const char* kNmsRow = "Average NMS Time";
inline constexpr const char* kTotalRow = "Average Inference Time";

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string render_table(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w0 = 6, w1 = 5;
  for (const auto& [k, v] : rows) w0 = std::max(w0, k.size()), w1 = std::max(w1, v.size());
  auto line = [&] { return "+" + std::string(w0 + 2, '-') + "+" + std::string(w1 + 2, '-') + "+\n"; };
  auto row = [&](const std::string& k, const std::string& v) {
    return "| " + k + std::string(w0 - k.size(), ' ') + " | " + std::string(w1 - v.size(), ' ') + v + " |\n";
  };
  std::string out = line() + row("Metric", "Value") + line();
  for (const auto& [k, v] : rows) out += row(k, v);
  return out + line();
}

}  // namespace detail

inline std::string metrics_table(const MetricsReport& r) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) rows.emplace_back(r.rate_name(i), detail::fixed(r.rates[i], 4));
  rows.emplace_back(kRotationRow, detail::fixed(r.rotation_error_avg, 2));
  rows.emplace_back(kTranslationRow, detail::fixed(r.translation_error_avg, 2));
  rows.emplace_back("instances", std::to_string(r.instance_count));
  rows.emplace_back("matched", std::to_string(r.matched_count));
  rows.emplace_back("unmatched_gt", std::to_string(r.unmatched_gt_count));
  return detail::render_table(rows);
}

inline nlohmann::ordered_json metrics_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric_label;
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) j[r.rate_name(i)] = r.rates[i];
  j["rotation_error_avg"] = r.rotation_error_avg;
  j["translation_error_avg"] = r.translation_error_avg;
  j["instance_count"] = r.instance_count;
  j["matched_count"] = r.matched_count;
  j["unmatched_gt_count"] = r.unmatched_gt_count;
  return j;
}

inline std::string timing_table(const TimingReport& t) {
  return detail::render_table({{kForwardRow, detail::fixed(t.avg_forward_ms, 3) + " ms"},
                               {kNmsRow, detail::fixed(t.avg_nms_ms, 3) + " ms"},
                               {kTotalRow, detail::fixed(t.avg_total_ms, 3) + " ms"},
                               {"images", std::to_string(t.count)}});
}

inline nlohmann::ordered_json timing_json(const TimingReport& t) {
  nlohmann::ordered_json j;
  j["avg_forward_ms"] = t.avg_forward_ms;
  j["avg_nms_ms"] = t.avg_nms_ms;
  j["avg_total_ms"] = t.avg_total_ms;
  j["count"] = t.count;
  j["forward_note"] = "decode+score analog; no network is run";
  return j;
}

}  // namespace poseforge
