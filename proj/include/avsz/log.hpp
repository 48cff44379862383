#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace avsz::log {

using Sink = std::function<void(const std::string&)>;

namespace detail {
inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}
inline Sink& current_sink() {
  static Sink sink = [](const std::string& line) { std::cerr << line << '\n'; };
  return sink;
}
}  // namespace detail

// Replaces the warning sink and returns the previous one.
inline Sink set_sink(Sink sink) {
  std::lock_guard<std::mutex> lock(detail::sink_mutex());
  return std::exchange(detail::current_sink(), std::move(sink));
}

inline void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(detail::sink_mutex());
  if (detail::current_sink()) detail::current_sink()("warning: " + message);
}

// Captures warnings for the lifetime of the object (tests, quiet CLI runs).
class ScopedCapture {
 public:
  ScopedCapture()
      : previous_(set_sink([this](const std::string& line) { lines_.push_back(line); })) {}
  ~ScopedCapture() { set_sink(std::move(previous_)); }
  ScopedCapture(const ScopedCapture&) = delete;
  ScopedCapture& operator=(const ScopedCapture&) = delete;

  const std::vector<std::string>& lines() const { return lines_; }

 private:
  std::vector<std::string> lines_;
  Sink previous_;
};

}  // namespace avsz::log
