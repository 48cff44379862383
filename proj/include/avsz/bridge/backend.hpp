#pragma once

#include <chrono>
#include <exception>
#include <memory>
#include <string>

#include "avsz/bridge/capability.hpp"
#include "avsz/bridge/envelope.hpp"
#include "avsz/error.hpp"

namespace avsz::bridge {

inline constexpr std::chrono::seconds kDefaultTimeout{120};

// A transport to one model server (or an in-process mock). Implementations
// must be safe for concurrent use.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendInfo& info() const = 0;
  // Raw exchange; may throw Timeout/TransportError. No validation here.
  virtual CapabilityResponse invoke(const CapabilityRequest& request) = 0;
};

using BackendHandle = std::shared_ptr<Backend>;

inline std::string stage_message(Capability c, const std::string& what) {
  return std::string(to_string(c)) + ": " + what;
}

// Validated call: capability declared, required parts present, transport
// failures classified, body schema checked, error responses raised as
// BackendError tagged with the capability name.
inline CapabilityResponse call(Backend& backend, const CapabilityRequest& request) {
  const Capability c = request.capability;
  if (!backend.info().supports(c)) {
    throw Error(Errc::kUnsupportedCapability,
                "backend '" + backend.info().name + "' does not provide " + std::string(to_string(c)));
  }
  for (auto part : required_parts(c)) {
    if (!request.find(part)) {
      throw Error(Errc::kInvalidArgument, stage_message(c, "request lacks part '" + std::string(part) + "'"));
    }
  }
  CapabilityResponse response;
  try {
    response = backend.invoke(request);
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::kTimeout:
      case Errc::kTransportError:
      case Errc::kUnmatchedFixture:
      case Errc::kSchemaViolation:
        throw Error(e.code(), stage_message(c, e.detail()));
      default:
        throw Error(Errc::kTransportError, stage_message(c, e.what()));
    }
  } catch (const std::exception& e) {
    throw Error(Errc::kTransportError, stage_message(c, e.what()));
  }
  if (!response.ok) throw Error(Errc::kBackendError, stage_message(c, response.error_message));
  validate_response(request, response);
  return response;
}

inline CapabilityResponse call(const BackendHandle& backend, const CapabilityRequest& request) {
  if (!backend) throw Error(Errc::kUnsupportedCapability, "no backend for " + std::string(to_string(request.capability)));
  return call(*backend, request);
}

}  // namespace avsz::bridge
