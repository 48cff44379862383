#pragma once

// HTTP transport: POST <base>/v1/<capability> with the request envelope as
// application/json; GET <base>/v1/meta for the backend description.

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "avsz/bridge/backend.hpp"
#include "avsz/bridge/envelope.hpp"

namespace avsz::bridge {

class HttpBackend final : public Backend {
 public:
  HttpBackend(BackendInfo info, std::string base_url, std::chrono::milliseconds timeout = kDefaultTimeout)
      : info_(std::move(info)), base_url_(std::move(base_url)), timeout_(timeout) {}

  const BackendInfo& info() const override { return info_; }

  CapabilityResponse invoke(const CapabilityRequest& request) override {
    const std::string body = serialize(request);
    const auto reply = exchange("POST", "/v1/" + std::string(to_string(request.capability)), body);
    try {
      return response_from_json(json::parse(reply));
    } catch (const json::exception& e) {
      throw Error(Errc::kSchemaViolation, std::string("response is not JSON: ") + e.what());
    }
  }

  BackendInfo fetch_meta() {
    const auto reply = exchange("GET", "/v1/meta", {});
    try {
      return parse_meta(json::parse(reply));
    } catch (const json::exception& e) {
      throw Error(Errc::kSchemaViolation, std::string("meta is not JSON: ") + e.what());
    }
  }

 private:
  std::string exchange(const std::string& method, const std::string& path, const std::string& body) {
    httplib::Client client(base_url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto started = std::chrono::steady_clock::now();
    auto result = method == "GET" ? client.Get(path) : client.Post(path, body, "application/json");
    if (!result) {
      const auto elapsed = std::chrono::steady_clock::now() - started;
      const auto err = result.error();
      if (err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && elapsed >= timeout_ * 9 / 10)) {
        throw Error(Errc::kTimeout, base_url_ + path + " exceeded " + std::to_string(timeout_.count()) + " ms");
      }
      throw Error(Errc::kTransportError, base_url_ + path + ": " + httplib::to_string(err));
    }
    if (result->status != 200) {
      // Servers may still send a well-formed error envelope.
      try {
        auto j = json::parse(result->body);
        if (j.is_object() && j.value("status", "") == "error") return result->body;
      } catch (const json::exception&) {
      }
      throw Error(Errc::kTransportError, base_url_ + path + ": HTTP " + std::to_string(result->status));
    }
    return result->body;
  }

  BackendInfo info_;
  std::string base_url_;
  std::chrono::milliseconds timeout_;
};

}  // namespace avsz::bridge
