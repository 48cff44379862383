#pragma once

// `eval`: per-sample metrics for a run's records against manifest GT, then
// the aggregate report.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/bridge/scoremap_codec.hpp"
#include "avsz/cli/run.hpp"
#include "avsz/core/manifest.hpp"
#include "avsz/core/mask_codec.hpp"
#include "avsz/engine/record.hpp"
#include "avsz/log.hpp"
#include "avsz/metrics/metrics.hpp"

namespace avsz::cli {

struct EvaluatedSample {
  metrics::SampleMetrics metrics;
  double threshold = 0.0;  // used for J and F
};

struct ExcludedSample {
  std::string sample_id;
  std::string reason;
};

struct EvalResult {
  std::string strategy;
  metrics::MetricConfig config;
  metrics::AggregateReport report;
  std::vector<EvaluatedSample> per_sample;
  std::vector<ExcludedSample> excluded;  // valid records left out (empty GT)
  std::vector<engine::PredictionRecord> errors;  // failed records
};

// `predictions` is a run's output directory or its records file.
inline fs::path records_path(const fs::path& predictions) {
  return fs::is_directory(predictions) ? predictions / kRecordsFile : predictions;
}

inline std::vector<engine::PredictionRecord> load_records(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::kMissingFile, "cannot open " + file.string());
  std::vector<engine::PredictionRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(engine::record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kParseError, file.string() + " line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::kParseError, file.string() + " line " + std::to_string(n) + ": " + e.detail());
    }
  }
  return out;
}

inline EvalResult cmd_eval(const fs::path& predictions, const fs::path& manifest,
                           const metrics::MetricConfig& config = {}) {
  RunConfig::validate_metric_config(config);
  const fs::path file = records_path(predictions);
  const fs::path base = file.has_parent_path() ? file.parent_path() : fs::path(".");
  const auto records = load_records(file);
  std::map<std::string, Sample> by_id;
  for (auto& s : load_manifest(manifest, ManifestOptions{false})) by_id.emplace(s.sample_id, std::move(s));

  EvalResult result;
  result.config = config;
  std::vector<metrics::SampleMetrics> valid;
  for (const auto& rec : records) {
    const std::string kind(engine::to_string(rec.strategy));
    if (result.strategy.empty()) {
      result.strategy = kind;
    } else if (result.strategy != kind) {
      throw Error(Errc::kParseError, "records mix strategies " + result.strategy + " and " + kind);
    }
    auto it = by_id.find(rec.sample_id);
    if (it == by_id.end()) throw Error(Errc::kMissingGT, "sample '" + rec.sample_id + "' is not in the manifest");
    if (!rec.ok()) {
      result.errors.push_back(rec);
      continue;
    }
    const Mask gt = [&] {
      try {
        return decode_mask(it->second.gt_mask);
      } catch (const Error& e) {
        throw Error(Errc::kMissingGT, "sample '" + rec.sample_id + "': " + e.detail());
      }
    }();
    if (gt.count() == 0) {
      log::warn(rec.sample_id + ": " + kEmptyGtWarning);
      result.excluded.push_back({rec.sample_id, kEmptyGtWarning});
      continue;
    }
    const ScoreMap scores = bridge::read_scoremap(base / rec.score_map_ref);
    const Mask grid_gt = (gt.width() == scores.width() && gt.height() == scores.height())
                             ? gt
                             : metrics::resample_nearest(gt, scores.width(), scores.height());
    if (grid_gt.count() == 0) {
      result.excluded.push_back({rec.sample_id, "GT vanishes on the score-map grid"});
      continue;
    }
    const double threshold = rec.ris_threshold.value_or(config.jf_threshold);
    auto m = metrics::evaluate_sample(rec.sample_id, scores, grid_gt, threshold, config);
    valid.push_back(m);
    result.per_sample.push_back({std::move(m), threshold});
  }
  if (valid.empty()) {
    throw Error(Errc::kNoValidSamples, std::to_string(records.size()) + " records, none evaluable");
  }
  result.report = metrics::aggregate(valid, config);
  result.report.n_excluded = result.excluded.size() + result.errors.size();
  return result;
}

inline nlohmann::json eval_to_json(const EvalResult& r) {
  using nlohmann::json;
  json per = json::array();
  for (const auto& s : r.per_sample) {
    per.push_back({{"sample_id", s.metrics.sample_id},
                   {"iou_adaptive", s.metrics.iou_adaptive},
                   {"f_adaptive", s.metrics.f_adaptive},
                   {"iou_thresholded", s.metrics.iou_thresholded},
                   {"f_thresholded", s.metrics.f_thresholded},
                   {"threshold", s.threshold}});
  }
  json excluded = json::array();
  for (const auto& e : r.excluded) excluded.push_back({{"sample_id", e.sample_id}, {"reason", e.reason}});
  json errors = json::array();
  for (const auto& e : r.errors) {
    errors.push_back({{"sample_id", e.sample_id}, {"code", errc_name(e.error->code)}, {"message", e.error->message}});
  }
  return {{"strategy", r.strategy},
          {"metrics",
           {{"ciou", r.report.ciou},
            {"auc", r.report.auc},
            {"miou", r.report.miou},
            {"fscore", r.report.fscore},
            {"j", r.report.j},
            {"f", r.report.f}}},
          {"n_samples", r.report.n_samples},
          {"n_excluded", r.report.n_excluded},
          {"metric_config",
           {{"beta_squared", r.config.beta_squared},
            {"auc_step", r.config.auc_step},
            {"jf_threshold", r.config.jf_threshold},
            {"ciou_strict", r.config.ciou_strict}}},
          {"per_sample", std::move(per)},
          {"excluded", std::move(excluded)},
          {"errors", std::move(errors)}};
}

}  // namespace avsz::cli
