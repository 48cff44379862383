#pragma once

// `report`: renders one or more eval reports as a markdown table (percent,
// one decimal) or as JSON at full precision.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/core/bytes.hpp"
#include "avsz/engine/record.hpp"

namespace avsz::cli {

using nlohmann::json;

inline constexpr const char* kMetricKeys[] = {"ciou", "auc", "miou", "fscore", "j", "f"};
inline constexpr const char* kMetricHeaders[] = {"cIoU", "AUC", "mIoU", "Fscore", "J", "F"};

enum class ReportFormat { kJson, kMarkdown };

inline ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "md" || name == "markdown") return ReportFormat::kMarkdown;
  throw Error(Errc::kConfigError, "unknown report format '" + name + "' (json or md)");
}

inline void check_report(const json& r, const std::string& origin) {
  const auto fail = [&](const std::string& why) { return Error(Errc::kParseError, origin + ": " + why); };
  if (!r.is_object()) throw fail("report is not an object");
  if (!r.contains("strategy") || !r["strategy"].is_string()) throw fail("report lacks 'strategy'");
  engine::parse_strategy(r["strategy"].get<std::string>());
  if (!r.contains("metrics") || !r["metrics"].is_object()) throw fail("report lacks 'metrics'");
  for (const char* key : kMetricKeys) {
    if (!r["metrics"].contains(key) || !r["metrics"][key].is_number()) {
      throw fail(std::string("metrics lack numeric '") + key + "'");
    }
  }
}

// A file holds one report, an array of reports, or {"reports": [...]}.
inline std::vector<json> load_reports(const std::vector<std::filesystem::path>& files) {
  std::vector<json> out;
  for (const auto& file : files) {
    json doc;
    try {
      doc = json::parse(bytes::read_text(file));
    } catch (const json::exception& e) {
      throw Error(Errc::kParseError, file.string() + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::kParseError, e.detail());
    }
    if (doc.is_object() && doc.contains("reports")) doc = doc["reports"];
    if (!doc.is_array()) doc = json::array({doc});
    for (auto& r : doc) {
      check_report(r, file.string());
      out.push_back(std::move(r));
    }
  }
  if (out.empty()) throw Error(Errc::kParseError, "no reports given");
  return out;
}

// Canonical strategy order; reports of the same strategy keep input order.
inline std::vector<json> ordered(std::vector<json> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const json& a, const json& b) {
    return engine::parse_strategy(a["strategy"].get<std::string>()) <
           engine::parse_strategy(b["strategy"].get<std::string>());
  });
  return reports;
}

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
  return buf;
}

inline std::string render_markdown(const std::vector<json>& reports) {
  std::string out = "| Strategy |";
  for (const char* h : kMetricHeaders) out += std::string(" ") + h + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < std::size(kMetricHeaders); ++i) out += "---:|";
  out += "\n";
  for (const auto& r : ordered(reports)) {
    out += "| " + std::string(engine::display_name(engine::parse_strategy(r["strategy"].get<std::string>()))) + " |";
    for (const char* key : kMetricKeys) out += " " + percent(r["metrics"][key].get<double>()) + " |";
    out += "\n";
  }
  return out;
}

inline std::string render_json(const std::vector<json>& reports) {
  if (reports.size() == 1) return reports.front().dump(2) + "\n";
  return json{{"reports", ordered(reports)}}.dump(2) + "\n";
}

inline std::string cmd_report(const std::vector<std::filesystem::path>& files, ReportFormat format) {
  const auto reports = load_reports(files);
  return format == ReportFormat::kJson ? render_json(reports) : render_markdown(reports);
}

}  // namespace avsz::cli
