#pragma once

// Backend roster: one [backend.<id>] section per backend. Keys: name,
// version, transport (http | subprocess | mock), url, argv, fixture,
// capabilities, ris_threshold, timeout_s. Relative fixture paths resolve
// against the roster's directory.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avsz/bridge/backend.hpp"
#include "avsz/bridge/cache.hpp"
#include "avsz/bridge/http_backend.hpp"
#include "avsz/bridge/mock_backend.hpp"
#include "avsz/bridge/subprocess_backend.hpp"
#include "avsz/core/bytes.hpp"
#include "avsz/core/keyvalue.hpp"

namespace avsz::bridge {

enum class Transport { kHttp, kSubprocess, kMock };

struct BackendSpec {
  std::string id;
  BackendInfo info;
  Transport transport = Transport::kMock;
  std::string url;
  std::vector<std::string> argv;
  std::filesystem::path fixture;
  std::chrono::milliseconds timeout = kDefaultTimeout;
};

inline std::vector<BackendSpec> parse_roster(const std::string& text, const std::filesystem::path& base_dir) {
  std::vector<kv::Section> sections;
  try {
    sections = kv::parse(text);
  } catch (const Error& e) {
    throw Error(Errc::kConfigError, "roster " + e.detail());
  }
  if (!sections.front().entries.empty()) {
    throw Error(Errc::kConfigError, "roster line " + std::to_string(sections.front().entries.begin()->second.line) +
                                        ": key outside a [backend.<id>] section");
  }

  std::vector<BackendSpec> specs;
  for (std::size_t i = 1; i < sections.size(); ++i) {
    const auto& sec = sections[i];
    if (sec.name.rfind("backend.", 0) != 0 || sec.name.size() <= 8) {
      throw Error(Errc::kConfigError, "roster line " + std::to_string(sec.line) + ": sections must be [backend.<id>]");
    }
    const std::string id = sec.name.substr(8);
    const auto fail = [&](const std::string& why) { return Error(Errc::kConfigError, "roster backend '" + id + "': " + why); };
    for (const auto& [key, _] : sec.entries) {
      static const std::set<std::string> known = {"name", "version", "transport", "url", "argv", "fixture",
                                                  "capabilities", "ris_threshold", "timeout_s"};
      if (!known.contains(key)) throw fail("unknown key '" + key + "'");
    }
    const auto get = [&]<typename T>(const char* key, const char* kind) -> std::optional<T> {
      auto it = sec.entries.find(key);
      if (it == sec.entries.end()) return std::nullopt;
      if (auto p = std::get_if<T>(&it->second.value)) return *p;
      throw fail(std::string("'") + key + "' must be " + kind);
    };
    const auto str = [&](const char* key) { return get.template operator()<std::string>(key, "a string"); };
    const auto list = [&](const char* key) {
      return get.template operator()<std::vector<std::string>>(key, "an array of strings");
    };
    const auto num = [&](const char* key) { return get.template operator()<double>(key, "a number"); };

    BackendSpec spec;
    spec.id = id;
    spec.info.name = str("name").value_or(id);
    spec.info.version = str("version").value_or("0");
    const std::string transport = str("transport").value_or("");
    if (transport == "http") {
      spec.transport = Transport::kHttp;
      spec.url = str("url").value_or("");
      if (spec.url.empty()) throw fail("http transport needs url");
    } else if (transport == "subprocess") {
      spec.transport = Transport::kSubprocess;
      spec.argv = list("argv").value_or(std::vector<std::string>{});
      if (spec.argv.empty()) throw fail("subprocess transport needs argv");
    } else if (transport == "mock") {
      spec.transport = Transport::kMock;
      const auto fixture = str("fixture");
      if (!fixture) throw fail("mock transport needs fixture");
      spec.fixture = base_dir / *fixture;
    } else {
      throw fail("transport must be http, subprocess or mock");
    }
    const auto caps = list("capabilities");
    if (!caps || caps->empty()) throw fail("capabilities required");
    for (const auto& c : *caps) {
      const auto cap = capability_from_string(c);
      if (!cap) throw fail("unknown capability '" + c + "'");
      spec.info.capabilities.insert(*cap);
    }
    if (auto t = num("ris_threshold")) {
      if (!(*t >= 0.0 && *t <= 1.0)) throw fail("ris_threshold outside [0,1]");
      spec.info.ris_threshold = *t;
    }
    if (auto t = num("timeout_s")) {
      if (!(*t > 0.0)) throw fail("timeout_s must be > 0");
      spec.timeout = std::chrono::milliseconds(static_cast<long long>(*t * 1000.0));
    }
    specs.push_back(std::move(spec));
  }
  if (specs.empty()) throw Error(Errc::kConfigError, "roster declares no backends");
  return specs;
}

inline std::vector<BackendSpec> load_roster(const std::filesystem::path& path) {
  std::string text;
  try {
    text = bytes::read_text(path);
  } catch (const Error& e) {
    throw Error(Errc::kConfigError, e.detail());
  }
  return parse_roster(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

inline BackendHandle make_backend(const BackendSpec& spec) {
  switch (spec.transport) {
    case Transport::kHttp:
      return std::make_shared<HttpBackend>(spec.info, spec.url, spec.timeout);
    case Transport::kSubprocess:
      return std::make_shared<SubprocessBackend>(spec.info, spec.argv, spec.timeout);
    case Transport::kMock: {
      auto mock = std::make_shared<MockBackend>(spec.info);
      load_mock_fixture(*mock, spec.fixture);
      return mock;
    }
  }
  return nullptr;
}

// Routes each capability to the first backend (in registration order) that
// declares it, optionally through a response cache.
class BackendSet {
 public:
  BackendSet() = default;

  void add(BackendHandle backend) {
    for (Capability c : backend->info().capabilities) routes_.try_emplace(c, backend);
    backends_.push_back(std::move(backend));
  }

  void set_cache(std::optional<ResponseCache> cache) { cache_ = std::move(cache); }
  const std::optional<ResponseCache>& cache() const { return cache_; }

  bool has(Capability c) const { return routes_.contains(c); }

  BackendHandle route(Capability c) const {
    auto it = routes_.find(c);
    return it == routes_.end() ? nullptr : it->second;
  }

  const std::vector<BackendHandle>& backends() const { return backends_; }

  CachedCall invoke(const CapabilityRequest& request) const {
    BackendHandle backend = route(request.capability);
    if (!backend) {
      throw Error(Errc::kUnsupportedCapability, "no backend provides " + std::string(to_string(request.capability)));
    }
    if (cache_) return cache_lookup_or_call(*cache_, *backend, request);
    return {call(*backend, request), false};
  }

 private:
  std::vector<BackendHandle> backends_;
  std::map<Capability, BackendHandle> routes_;
  std::optional<ResponseCache> cache_;
};

inline BackendSet make_backend_set(const std::vector<BackendSpec>& specs) {
  BackendSet set;
  for (const auto& spec : specs) set.add(make_backend(spec));
  return set;
}

}  // namespace avsz::bridge
