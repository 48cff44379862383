#pragma once

// Content-addressed store of validated backend responses.
//
// key = sha256 of the canonical JSON
//   {"backend", "capability", "parts": {name: sha256}, "version"}
// The sample id is not part of the key: identical payloads share an entry.
// Entries live at <dir>/<key[0:2]>/<key>.json and hold the canonical
// response serialization. Only ok responses are stored.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "avsz/bridge/backend.hpp"
#include "avsz/bridge/envelope.hpp"
#include "avsz/bridge/hash.hpp"
#include "avsz/core/bytes.hpp"
#include "avsz/log.hpp"

namespace avsz::bridge {

inline constexpr const char* kCacheDirEnv = "AVSZ_CACHE_DIR";

inline std::string cache_key(const BackendInfo& backend, const CapabilityRequest& request) {
  json parts = json::object();
  for (const auto& [name, part] : request.parts) parts[name] = part.sha256();
  const json canonical = {{"backend", backend.name},
                          {"version", backend.version},
                          {"capability", to_string(request.capability)},
                          {"parts", std::move(parts)}};
  return sha256_hex(canonical.dump());
}

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path entry_path(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".json"); }

  // Missing entry -> nullopt. Unreadable or invalid entry -> warning, nullopt.
  std::optional<CapabilityResponse> lookup(const std::string& key, const CapabilityRequest& request) const {
    const auto path = entry_path(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
      const std::string stored = bytes::read_text(path);
      CapabilityResponse resp = response_from_json(json::parse(stored));
      if (!resp.ok) throw Error(Errc::kSchemaViolation, "stored response is an error");
      validate_response(request, resp);
      if (serialize(resp) != stored) throw Error(Errc::kSchemaViolation, "entry is not in canonical form");
      return resp;
    } catch (const std::exception& e) {
      log::warn("cache entry " + path.string() + " unreadable (" + e.what() + "); recomputing");
      return std::nullopt;
    }
  }

  void store(const std::string& key, const CapabilityResponse& response) const {
    if (!response.ok) return;
    bytes::write_text_atomic(entry_path(key), serialize(response));
  }

 private:
  std::filesystem::path dir_;
};

// Precedence: explicit setting, then $AVSZ_CACHE_DIR, then the fallback.
inline std::filesystem::path resolve_cache_dir(const std::optional<std::filesystem::path>& configured,
                                               const std::filesystem::path& fallback) {
  if (configured && !configured->empty()) return *configured;
  if (const char* env = std::getenv(kCacheDirEnv); env && *env) return env;
  return fallback;
}

struct CachedCall {
  CapabilityResponse response;
  bool hit = false;
};

inline CachedCall cache_lookup_or_call(const ResponseCache& cache, Backend& backend,
                                       const CapabilityRequest& request) {
  const std::string key = cache_key(backend.info(), request);
  if (backend.info().supports(request.capability)) {
    if (auto cached = cache.lookup(key, request)) return {std::move(*cached), true};
  }
  CapabilityResponse response = call(backend, request);
  cache.store(key, response);
  return {std::move(response), false};
}

}  // namespace avsz::bridge
