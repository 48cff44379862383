#pragma once

// Wire envelopes for backend capability calls. See docs/protocol.md.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/bridge/capability.hpp"
#include "avsz/bridge/hash.hpp"
#include "avsz/bridge/scoremap_codec.hpp"
#include "avsz/core/types.hpp"
#include "avsz/error.hpp"
#include "avsz/inversion/embedding.hpp"

namespace avsz::bridge {

using nlohmann::json;

inline constexpr std::string_view kProtocolVersion = "avsz/1";

// A named request payload: UTF-8 text or opaque bytes. Both carry a
// content hash; only the hash enters the cache key.
class Part {
 public:
  enum class Kind { kText, kBinary };

  static Part text(std::string value) { return Part(Kind::kText, std::move(value)); }
  static Part binary(std::span<const std::uint8_t> data) {
    return Part(Kind::kBinary, std::string(reinterpret_cast<const char*>(data.data()), data.size()));
  }

  Kind kind() const noexcept { return kind_; }
  const std::string& data() const noexcept { return data_; }
  const std::string& sha256() const noexcept { return sha256_; }
  std::span<const std::uint8_t> bytes() const noexcept {
    return {reinterpret_cast<const std::uint8_t*>(data_.data()), data_.size()};
  }

  friend bool operator==(const Part& a, const Part& b) { return a.kind_ == b.kind_ && a.data_ == b.data_; }

 private:
  Part(Kind kind, std::string data) : kind_(kind), data_(std::move(data)), sha256_(sha256_hex(data_)) {}

  Kind kind_;
  std::string data_;
  std::string sha256_;
};

struct CapabilityRequest {
  Capability capability = Capability::kAudioClassify;
  std::string sample_id;
  std::map<std::string, Part> parts;  // ordered by name: canonical

  CapabilityRequest& with_text(const std::string& name, std::string value) {
    parts.insert_or_assign(name, Part::text(std::move(value)));
    return *this;
  }
  CapabilityRequest& with_binary(const std::string& name, std::span<const std::uint8_t> data) {
    parts.insert_or_assign(name, Part::binary(data));
    return *this;
  }
  const Part* find(std::string_view name) const {
    auto it = parts.find(std::string(name));
    return it == parts.end() ? nullptr : &it->second;
  }
};

struct CapabilityResponse {
  bool ok = true;
  json body = json::object();
  std::string error_message;

  static CapabilityResponse success(json body) { return {true, std::move(body), {}}; }
  static CapabilityResponse failure(std::string message) { return {false, json::object(), std::move(message)}; }

  friend bool operator==(const CapabilityResponse&, const CapabilityResponse&) = default;
};

// ---- envelope (de)serialization -------------------------------------------

inline json request_to_json(const CapabilityRequest& req) {
  json parts = json::object();
  for (const auto& [name, part] : req.parts) {
    if (part.kind() == Part::Kind::kText) {
      parts[name] = {{"kind", "text"}, {"value", part.data()}};
    } else {
      parts[name] = {{"kind", "binary"}, {"sha256", part.sha256()}, {"base64", base64_encode(part.bytes())}};
    }
  }
  return {{"protocol", kProtocolVersion},
          {"capability", to_string(req.capability)},
          {"sample_id", req.sample_id},
          {"parts", std::move(parts)}};
}

inline CapabilityRequest request_from_json(const json& j) {
  try {
    if (j.at("protocol").get<std::string>() != kProtocolVersion) {
      throw Error(Errc::kSchemaViolation, "unsupported protocol " + j.at("protocol").dump());
    }
    CapabilityRequest req;
    req.capability = parse_capability(j.at("capability").get<std::string>());
    req.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& [name, part] : j.at("parts").items()) {
      const std::string kind = part.at("kind").get<std::string>();
      if (kind == "text") {
        req.with_text(name, part.at("value").get<std::string>());
      } else if (kind == "binary") {
        const auto data = base64_decode(part.at("base64").get<std::string>());
        req.with_binary(name, data);
        if (req.parts.at(name).sha256() != part.at("sha256").get<std::string>()) {
          throw Error(Errc::kSchemaViolation, "part '" + name + "' sha256 does not match its content");
        }
      } else {
        throw Error(Errc::kSchemaViolation, "part '" + name + "' has unknown kind " + kind);
      }
    }
    return req;
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaViolation, std::string("malformed request envelope: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::kSchemaViolation) throw;
    throw Error(Errc::kSchemaViolation, e.detail());
  }
}

inline json response_to_json(const CapabilityResponse& resp) {
  if (resp.ok) return {{"status", "ok"}, {"body", resp.body}};
  return {{"status", "error"}, {"error", resp.error_message}};
}

inline CapabilityResponse response_from_json(const json& j) {
  try {
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok") {
      if (!j.at("body").is_object()) throw Error(Errc::kSchemaViolation, "response body must be an object");
      return CapabilityResponse::success(j.at("body"));
    }
    if (status == "error") return CapabilityResponse::failure(j.at("error").get<std::string>());
    throw Error(Errc::kSchemaViolation, "unknown response status '" + status + "'");
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaViolation, std::string("malformed response envelope: ") + e.what());
  }
}

// Canonical single-line form (object keys sorted), used for the cache and
// the stdio transport.
inline std::string serialize(const CapabilityResponse& resp) { return response_to_json(resp).dump(); }
inline std::string serialize(const CapabilityRequest& req) { return request_to_json(req).dump(); }

// ---- payload helpers ---------------------------------------------------------

inline std::string candidates_payload(const std::vector<std::string>& candidates) {
  return json(candidates).dump();
}

inline std::vector<std::string> parse_candidates_payload(const Part& part) {
  try {
    return json::parse(part.data()).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaViolation, std::string("candidates part: ") + e.what());
  }
}

inline std::string tokens_payload(const inversion::TokenEmbeddings& tokens) {
  return json{{"num_tokens", tokens.num_tokens()},
              {"dim", tokens.dim()},
              {"values", std::vector<double>(tokens.values().begin(), tokens.values().end())}}
      .dump();
}

inline inversion::TokenEmbeddings parse_tokens_payload(std::string_view text) {
  try {
    const json j = json::parse(text);
    return inversion::TokenEmbeddings(j.at("num_tokens").get<std::size_t>(), j.at("dim").get<std::size_t>(),
                                      j.at("values").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaViolation, std::string("token embeddings payload: ") + e.what());
  }
}

// ---- typed response bodies -------------------------------------------------------

struct RankedLabel {
  std::string label;
  double score = 0.0;
  friend bool operator==(const RankedLabel&, const RankedLabel&) = default;
};

struct EncodeGradResult {
  inversion::EmbeddingVector embedding;
  std::optional<inversion::TokenEmbeddings> gradient;
};

namespace detail {

[[noreturn]] inline void violation(Capability c, const std::string& what) {
  throw Error(Errc::kSchemaViolation, std::string(to_string(c)) + ": " + what);
}

inline std::vector<double> finite_array(Capability c, const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_array()) violation(c, std::string("missing array '") + key + "'");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) violation(c, std::string("non-numeric entry in '") + key + "'");
    const double d = v.get<double>();
    if (!std::isfinite(d)) violation(c, std::string("non-finite entry in '") + key + "'");
    out.push_back(d);
  }
  return out;
}

}  // namespace detail

inline std::vector<RankedLabel> body_ranked_labels(Capability c, const json& body) {
  auto it = body.find("labels");
  if (it == body.end() || !it->is_array()) detail::violation(c, "missing array 'labels'");
  std::vector<RankedLabel> out;
  for (const auto& entry : *it) {
    if (!entry.is_object() || !entry.contains("label") || !entry["label"].is_string() ||
        !entry.contains("score") || !entry["score"].is_number()) {
      detail::violation(c, "label entries need string 'label' and numeric 'score'");
    }
    RankedLabel r{entry["label"].get<std::string>(), entry["score"].get<double>()};
    if (r.label.empty()) detail::violation(c, "empty label string");
    if (!std::isfinite(r.score)) detail::violation(c, "non-finite label score");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string body_text(Capability c, const json& body) {
  auto it = body.find("text");
  if (it == body.end() || !it->is_string()) detail::violation(c, "missing string 'text'");
  return it->get<std::string>();
}

inline std::vector<double> body_scores(Capability c, const json& body, std::size_t expected) {
  auto scores = detail::finite_array(c, body, "scores");
  if (scores.size() != expected) {
    detail::violation(c, "expected " + std::to_string(expected) + " scores, got " + std::to_string(scores.size()));
  }
  return scores;
}

inline inversion::EmbeddingVector body_embedding(Capability c, const json& body) {
  auto v = detail::finite_array(c, body, "embedding");
  if (v.empty()) detail::violation(c, "empty embedding");
  if (!(inversion::l2_norm(v) > 0.0)) detail::violation(c, "zero embedding");
  return v;
}

inline ScoreMap body_scoremap(Capability c, const json& body) {
  auto it = body.find("score_map");
  if (it == body.end() || !it->is_string()) detail::violation(c, "missing base64 'score_map'");
  try {
    return decode_scoremap(base64_decode(it->get<std::string>()));
  } catch (const Error& e) {
    detail::violation(c, e.what());
  }
}

inline json scoremap_body(const ScoreMap& map) { return {{"score_map", base64_encode(encode_scoremap(map))}}; }

inline std::vector<std::string> body_phrases(Capability c, const json& body) {
  auto it = body.find("phrases");
  if (it == body.end() || !it->is_array()) detail::violation(c, "missing array 'phrases'");
  std::vector<std::string> out;
  for (const auto& p : *it) {
    if (!p.is_string()) detail::violation(c, "phrases must be strings");
    out.push_back(p.get<std::string>());
  }
  return out;
}

inline EncodeGradResult body_encode_grad(Capability c, const json& body,
                                         const inversion::TokenEmbeddings& tokens, bool expect_gradient) {
  EncodeGradResult r;
  r.embedding = body_embedding(c, body);
  if (body.contains("gradient")) {
    auto g = detail::finite_array(c, body, "gradient");
    if (g.size() != tokens.size()) detail::violation(c, "gradient length does not match token shape");
    r.gradient = inversion::TokenEmbeddings(tokens.num_tokens(), tokens.dim(), std::move(g));
  } else if (expect_gradient) {
    detail::violation(c, "missing 'gradient' for a request with a target");
  }
  return r;
}

// Checks an ok response against the capability's body schema. Throws
// SchemaViolation; error responses pass through untouched.
inline void validate_response(const CapabilityRequest& req, const CapabilityResponse& resp) {
  if (!resp.ok) return;
  const Capability c = req.capability;
  if (!resp.body.is_object()) detail::violation(c, "body must be an object");
  switch (c) {
    case Capability::kAudioClassify:
      body_ranked_labels(c, resp.body);
      break;
    case Capability::kAudioCaption:
    case Capability::kImageCaption:
      body_text(c, resp.body);
      break;
    case Capability::kAudioClassifyOpenVocab:
    case Capability::kImageClassifyOpenVocab: {
      const Part* cands = req.find("candidates");
      const std::size_t n = cands ? parse_candidates_payload(*cands).size() : 0;
      body_scores(c, resp.body, n);
      break;
    }
    case Capability::kAudioEmbed:
      body_embedding(c, resp.body);
      break;
    case Capability::kRisSegment:
    case Capability::kRisSegmentEmbedding:
      body_scoremap(c, resp.body);
      break;
    case Capability::kTextEncodeGrad: {
      const Part* tokens = req.find("tokens");
      if (!tokens) detail::violation(c, "request lacks 'tokens'");
      body_encode_grad(c, resp.body, parse_tokens_payload(tokens->data()), req.find("target") != nullptr);
      break;
    }
    case Capability::kNlpChunk:
      body_phrases(c, resp.body);
      break;
  }
}

// /v1/meta document: name, version, capabilities, ris_threshold.
inline BackendInfo parse_meta(const json& meta) {
  const auto field = [&](const char* key) -> const json& {
    auto it = meta.find(key);
    if (it == meta.end()) throw Error(Errc::kSchemaViolation, std::string("meta lacks field '") + key + "'");
    return *it;
  };
  BackendInfo info;
  const json& name = field("name");
  const json& version = field("version");
  const json& caps = field("capabilities");
  const json& threshold = field("ris_threshold");
  if (!name.is_string() || !version.is_string()) {
    throw Error(Errc::kSchemaViolation, "meta 'name' and 'version' must be strings");
  }
  if (!caps.is_array()) throw Error(Errc::kSchemaViolation, "meta 'capabilities' must be an array");
  info.name = name.get<std::string>();
  info.version = version.get<std::string>();
  for (const auto& c : caps) {
    if (!c.is_string()) throw Error(Errc::kSchemaViolation, "meta capability names must be strings");
    const auto cap = capability_from_string(c.get<std::string>());
    if (!cap) throw Error(Errc::kSchemaViolation, "meta declares unknown capability " + c.dump());
    info.capabilities.insert(*cap);
  }
  if (threshold.is_number()) {
    const double t = threshold.get<double>();
    if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::kSchemaViolation, "meta 'ris_threshold' outside [0,1]");
    info.ris_threshold = t;
  } else if (!threshold.is_null()) {
    throw Error(Errc::kSchemaViolation, "meta 'ris_threshold' must be a number or null");
  }
  return info;
}

}  // namespace avsz::bridge
