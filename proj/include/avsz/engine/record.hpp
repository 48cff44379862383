#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/core/types.hpp"
#include "avsz/error.hpp"
#include "avsz/inversion/embedding.hpp"
#include "avsz/text/phrase_extractor.hpp"

namespace avsz::engine {

using nlohmann::json;

enum class StrategyKind { kClassification, kCaptioning, kInversion, kVcapAcls, kAcapVcls };

inline constexpr std::array<StrategyKind, 5> kAllStrategies = {
    StrategyKind::kClassification, StrategyKind::kCaptioning, StrategyKind::kInversion,
    StrategyKind::kVcapAcls, StrategyKind::kAcapVcls};

// Record / report spelling.
inline constexpr std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kClassification: return "classification";
    case StrategyKind::kCaptioning: return "captioning";
    case StrategyKind::kInversion: return "inversion";
    case StrategyKind::kVcapAcls: return "vcap_acls";
    case StrategyKind::kAcapVcls: return "acap_vcls";
  }
  return "?";
}

// Command-line spelling.
inline constexpr std::string_view cli_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::kVcapAcls: return "vcap-acls";
    case StrategyKind::kAcapVcls: return "acap-vcls";
    default: return to_string(k);
  }
}

inline constexpr std::string_view display_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::kClassification: return "Classification";
    case StrategyKind::kCaptioning: return "Captioning";
    case StrategyKind::kInversion: return "Inversion";
    case StrategyKind::kVcapAcls: return "VCap+ACls";
    case StrategyKind::kAcapVcls: return "ACap+VCls";
  }
  return "?";
}

// Accepts either spelling.
inline StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind k : kAllStrategies) {
    if (name == to_string(k) || name == cli_name(k)) return k;
  }
  throw Error(Errc::kConfigError, "unknown strategy '" + std::string(name) + "'");
}

struct VerificationTrace {
  std::string caption;
  std::vector<text::Candidate> candidates;
  std::vector<std::pair<std::string, double>> candidate_scores;
  std::string winner;
  bool fallback_used = false;
};

struct InversionTrace {
  std::string encoder;  // "toy" or "remote"
  double final_similarity = 0.0;
  std::size_t iters = 0;
  std::size_t num_tokens = 0;
  std::size_t dim = 0;
};

struct RecordError {
  Errc code = Errc::kBackendError;
  std::string message;
};

struct PredictionRecord {
  std::string sample_id;
  StrategyKind strategy = StrategyKind::kClassification;
  std::optional<std::string> label;  // c
  std::optional<double> label_score;
  std::optional<std::string> caption;
  std::string derived_text;  // d as sent to RIS; empty for inversion
  std::optional<inversion::TokenEmbeddings> embedding;  // inversion only
  std::optional<VerificationTrace> verification;
  std::optional<InversionTrace> inversion;
  std::optional<double> ris_threshold;
  std::optional<ScoreMap> score_map;
  std::vector<std::pair<std::string, double>> timings;  // stage, ms
  std::optional<RecordError> error;

  // Set by the writer once artifacts are on disk (relative to the output dir).
  std::string score_map_ref;
  std::string embedding_ref;
  std::string embedding_sha256;

  bool ok() const { return !error.has_value(); }
};

namespace detail {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline Errc errc_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Errc::kNoValidSamples); ++i) {
    if (errc_name(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  }
  throw Error(Errc::kParseError, "unknown error code '" + std::string(name) + "'");
}

}  // namespace detail

inline json timings_json(const PredictionRecord& r) {
  json t = json::object();
  for (const auto& [stage, ms] : r.timings) t[stage] = ms;
  return t;
}

// Timings are wall-clock and vary run to run; callers that need
// reproducible bytes leave them out and store them separately.
inline json record_to_json(const PredictionRecord& r, bool with_timings = false) {
  json j;
  j["sample_id"] = r.sample_id;
  j["strategy"] = to_string(r.strategy);
  j["status"] = r.ok() ? "ok" : "error";
  j["error"] = r.error ? json{{"code", errc_name(r.error->code)}, {"message", r.error->message}} : json(nullptr);
  j["label"] = detail::optional_json(r.label);
  j["label_score"] = detail::optional_json(r.label_score);
  j["caption"] = detail::optional_json(r.caption);
  j["derived_text"] = r.derived_text.empty() ? json(nullptr) : json(r.derived_text);
  if (r.embedding) {
    j["embedding"] = {{"ref", r.embedding_ref},
                      {"sha256", r.embedding_sha256},
                      {"num_tokens", r.embedding->num_tokens()},
                      {"dim", r.embedding->dim()}};
  } else {
    j["embedding"] = nullptr;
  }
  if (r.verification) {
    const auto& v = *r.verification;
    json cands = json::array();
    for (const auto& c : v.candidates) cands.push_back({{"phrase", c.phrase}, {"begin", c.begin}, {"end", c.end}});
    json scores = json::array();
    for (const auto& [p, s] : v.candidate_scores) scores.push_back({{"phrase", p}, {"score", s}});
    j["verification"] = {{"caption", v.caption},
                         {"candidates", std::move(cands)},
                         {"candidate_scores", std::move(scores)},
                         {"winner", v.winner},
                         {"fallback_used", v.fallback_used}};
  } else {
    j["verification"] = nullptr;
  }
  if (r.inversion) {
    j["inversion"] = {{"encoder", r.inversion->encoder},
                      {"final_similarity", r.inversion->final_similarity},
                      {"iters", r.inversion->iters},
                      {"num_tokens", r.inversion->num_tokens},
                      {"dim", r.inversion->dim}};
  } else {
    j["inversion"] = nullptr;
  }
  j["ris_threshold"] = detail::optional_json(r.ris_threshold);
  j["score_map_ref"] = r.score_map_ref.empty() ? json(nullptr) : json(r.score_map_ref);
  if (with_timings) j["timings"] = timings_json(r);
  return j;
}

// Inverse of record_to_json for the fields evaluation needs; artifacts
// (score map, embedding) stay on disk and are referenced by path.
inline PredictionRecord record_from_json(const json& j) {
  try {
    PredictionRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    if (r.sample_id.empty()) throw Error(Errc::kParseError, "record with empty sample_id");
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    const std::string status = j.at("status").get<std::string>();
    if (status == "error") {
      const auto& e = j.at("error");
      r.error = RecordError{detail::errc_from_name(e.at("code").get<std::string>()), e.at("message").get<std::string>()};
    } else if (status != "ok") {
      throw Error(Errc::kParseError, "record status must be ok or error");
    }
    if (auto it = j.find("label"); it != j.end() && it->is_string()) r.label = it->get<std::string>();
    if (auto it = j.find("label_score"); it != j.end() && it->is_number()) r.label_score = it->get<double>();
    if (auto it = j.find("caption"); it != j.end() && it->is_string()) r.caption = it->get<std::string>();
    if (auto it = j.find("derived_text"); it != j.end() && it->is_string()) r.derived_text = it->get<std::string>();
    if (auto it = j.find("ris_threshold"); it != j.end() && it->is_number()) r.ris_threshold = it->get<double>();
    if (auto it = j.find("score_map_ref"); it != j.end() && it->is_string()) r.score_map_ref = it->get<std::string>();
    if (auto it = j.find("embedding"); it != j.end() && it->is_object()) {
      r.embedding_ref = it->value("ref", "");
      r.embedding_sha256 = it->value("sha256", "");
    }
    if (auto it = j.find("verification"); it != j.end() && it->is_object()) {
      VerificationTrace v;
      v.caption = it->at("caption").get<std::string>();
      for (const auto& c : it->at("candidates")) {
        v.candidates.push_back({c.at("phrase").get<std::string>(), c.at("begin").get<std::size_t>(),
                                c.at("end").get<std::size_t>()});
      }
      for (const auto& c : it->at("candidate_scores")) {
        v.candidate_scores.emplace_back(c.at("phrase").get<std::string>(), c.at("score").get<double>());
      }
      v.winner = it->at("winner").get<std::string>();
      v.fallback_used = it->at("fallback_used").get<bool>();
      r.verification = std::move(v);
    }
    if (auto it = j.find("inversion"); it != j.end() && it->is_object()) {
      r.inversion = InversionTrace{};
      r.inversion->encoder = it->at("encoder").get<std::string>();
      r.inversion->final_similarity = it->at("final_similarity").get<double>();
      r.inversion->iters = it->at("iters").get<std::size_t>();
      r.inversion->num_tokens = it->at("num_tokens").get<std::size_t>();
      r.inversion->dim = it->at("dim").get<std::size_t>();
    }
    if (auto it = j.find("timings"); it != j.end() && it->is_object()) {
      for (const auto& [stage, ms] : it->items()) r.timings.emplace_back(stage, ms.get<double>());
    }
    if (r.ok() && r.score_map_ref.empty()) {
      throw Error(Errc::kParseError, "ok record for '" + r.sample_id + "' lacks score_map_ref");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::kParseError, std::string("prediction record: ") + e.what());
  }
}

}  // namespace avsz::engine
