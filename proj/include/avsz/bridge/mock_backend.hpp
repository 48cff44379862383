#pragma once

// Deterministic in-process backend answering from registered fixture tables.

#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/bridge/backend.hpp"
#include "avsz/core/bytes.hpp"
#include "avsz/log.hpp"

namespace avsz::bridge {

// Table key: the request's sample_id plus a selector. The selector is the
// request's "text" part for ris_segment and nlp_chunk, and "*" otherwise;
// a fixture registered with selector "*" (or sample_id "*") matches any.
struct Fingerprint {
  std::string sample_id;
  std::string selector = "*";
  auto operator<=>(const Fingerprint&) const = default;
};

inline constexpr const char* kAnySelector = "*";

inline std::string selector_of(const CapabilityRequest& request) {
  if (request.capability == Capability::kRisSegment || request.capability == Capability::kNlpChunk) {
    if (const Part* text = request.find("text")) return text->data();
  }
  return kAnySelector;
}

using MockReply = std::function<CapabilityResponse(const CapabilityRequest&)>;
using MockTable = std::vector<std::pair<Fingerprint, MockReply>>;

inline MockReply reply_ok(json body) {
  return [body = std::move(body)](const CapabilityRequest&) { return CapabilityResponse::success(body); };
}

inline MockReply reply_error(std::string message) {
  return [message = std::move(message)](const CapabilityRequest&) { return CapabilityResponse::failure(message); };
}

// Simulates a transport-level failure (connection reset, timeout).
inline MockReply reply_throw(Errc code, std::string message) {
  return [code, message = std::move(message)](const CapabilityRequest&) -> CapabilityResponse {
    throw Error(code, message);
  };
}

inline MockReply reply_labels(std::vector<RankedLabel> labels) {
  json arr = json::array();
  for (const auto& l : labels) arr.push_back({{"label", l.label}, {"score", l.score}});
  return reply_ok({{"labels", std::move(arr)}});
}

inline MockReply reply_text(std::string text) { return reply_ok({{"text", std::move(text)}}); }

inline MockReply reply_scoremap(const ScoreMap& map) { return reply_ok(scoremap_body(map)); }

inline MockReply reply_embedding(std::vector<double> values) { return reply_ok({{"embedding", std::move(values)}}); }

// Open-vocabulary scorer: answers one score per requested candidate, in
// request order, looked up by label. Unknown labels are a fixture gap.
inline MockReply reply_scores_by_label(std::map<std::string, double> scores) {
  return [scores = std::move(scores)](const CapabilityRequest& req) {
    const Part* cands = req.find("candidates");
    if (!cands) throw Error(Errc::kUnmatchedFixture, "open-vocabulary request without candidates");
    json out = json::array();
    for (const auto& label : parse_candidates_payload(*cands)) {
      auto it = scores.find(label);
      if (it == scores.end()) {
        throw Error(Errc::kUnmatchedFixture, "no fixture score for candidate '" + label + "' (" + req.sample_id + ")");
      }
      out.push_back(it->second);
    }
    return CapabilityResponse::success({{"scores", std::move(out)}});
  };
}

class MockBackend final : public Backend {
 public:
  explicit MockBackend(BackendInfo info) : info_(std::move(info)) {}

  const BackendInfo& info() const override { return info_; }

  void add(Capability capability, Fingerprint fp, MockReply reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& table = tables_[capability];
    if (table.contains(fp)) {
      log::warn("mock fixture for " + std::string(to_string(capability)) + " (" + fp.sample_id + ", " +
                fp.selector + ") registered twice; last registration wins");
    }
    table.insert_or_assign(std::move(fp), std::move(reply));
  }

  CapabilityResponse invoke(const CapabilityRequest& request) override {
    calls_[static_cast<std::size_t>(request.capability)].fetch_add(1);
    MockReply reply;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto t = tables_.find(request.capability);
      if (t != tables_.end()) {
        const std::string selector = selector_of(request);
        for (const Fingerprint& fp : {Fingerprint{request.sample_id, selector},
                                      Fingerprint{request.sample_id, kAnySelector},
                                      Fingerprint{kAnySelector, selector},
                                      Fingerprint{kAnySelector, kAnySelector}}) {
          if (auto it = t->second.find(fp); it != t->second.end()) {
            reply = it->second;
            break;
          }
        }
      }
    }
    if (!reply) {
      throw Error(Errc::kUnmatchedFixture, "no fixture for " + std::string(to_string(request.capability)) +
                                               " sample '" + request.sample_id + "' selector '" +
                                               selector_of(request) + "'");
    }
    return reply(request);
  }

  std::size_t calls(Capability c) const { return calls_[static_cast<std::size_t>(c)].load(); }
  void reset_calls() {
    for (auto& c : calls_) c.store(0);
  }

 private:
  BackendInfo info_;
  mutable std::mutex mutex_;
  std::map<Capability, std::map<Fingerprint, MockReply>> tables_;
  std::array<std::atomic<std::size_t>, kAllCapabilities.size()> calls_{};
};

inline void register_mock(MockBackend& backend, Capability capability, MockTable table) {
  for (auto& [fp, reply] : table) backend.add(capability, std::move(fp), std::move(reply));
}

// Fixture file: {"responses": [{"capability", "sample_id", "selector"?,
// and one of "body" | "error" | "labels" | "text" | "scores_by_label" |
// "score_map": {"width","height","values"} | "embedding"}]}.
inline void load_mock_fixture(MockBackend& backend, const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(bytes::read_text(path));
  } catch (const json::exception& e) {
    throw Error(Errc::kParseError, path.string() + ": " + e.what());
  }
  try {
    for (const auto& entry : doc.at("responses")) {
      const Capability cap = parse_capability(entry.at("capability").get<std::string>());
      Fingerprint fp{entry.value("sample_id", std::string(kAnySelector)),
                     entry.value("selector", std::string(kAnySelector))};
      MockReply reply;
      if (entry.contains("error")) {
        reply = reply_error(entry["error"].get<std::string>());
      } else if (entry.contains("body")) {
        reply = reply_ok(entry["body"]);
      } else if (entry.contains("labels")) {
        std::vector<RankedLabel> labels;
        for (const auto& l : entry["labels"]) labels.push_back({l.at(0).get<std::string>(), l.at(1).get<double>()});
        reply = reply_labels(std::move(labels));
      } else if (entry.contains("text")) {
        reply = reply_text(entry["text"].get<std::string>());
      } else if (entry.contains("scores_by_label")) {
        reply = reply_scores_by_label(entry["scores_by_label"].get<std::map<std::string, double>>());
      } else if (entry.contains("score_map")) {
        const auto& m = entry["score_map"];
        reply = reply_scoremap(ScoreMap(m.at("width").get<std::uint32_t>(), m.at("height").get<std::uint32_t>(),
                                        m.at("values").get<std::vector<float>>()));
      } else if (entry.contains("embedding")) {
        reply = reply_embedding(entry["embedding"].get<std::vector<double>>());
      } else {
        throw Error(Errc::kParseError, path.string() + ": fixture entry without a reply");
      }
      backend.add(cap, std::move(fp), std::move(reply));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kParseError, path.string() + ": " + e.what());
  }
}

}  // namespace avsz::bridge
