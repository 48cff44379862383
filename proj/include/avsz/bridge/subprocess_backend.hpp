#pragma once

// Standard-stream transport: the backend is a child process that reads one
// request envelope per line on stdin and answers with one response
// envelope per line on stdout. Requests are serialized; a child that dies
// or times out is killed and restarted on the next call.

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/bridge/backend.hpp"
#include "avsz/bridge/envelope.hpp"

namespace avsz::bridge {

class SubprocessBackend final : public Backend {
 public:
  SubprocessBackend(BackendInfo info, std::vector<std::string> argv,
                    std::chrono::milliseconds timeout = kDefaultTimeout)
      : info_(std::move(info)), argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw Error(Errc::kConfigError, "subprocess backend needs argv");
  }
  ~SubprocessBackend() override { stop(); }
  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  const BackendInfo& info() const override { return info_; }

  CapabilityResponse invoke(const CapabilityRequest& request) override {
    std::lock_guard<std::mutex> lock(mutex_);
    if (pid_ <= 0) start();
    const std::string line = serialize(request) + "\n";
    try {
      send_all(line);
      const std::string reply = read_line();
      try {
        return response_from_json(json::parse(reply));
      } catch (const json::exception& e) {
        throw Error(Errc::kSchemaViolation, std::string("response is not JSON: ") + e.what());
      }
    } catch (const Error& e) {
      if (e.code() == Errc::kTimeout || e.code() == Errc::kTransportError) stop();
      throw;
    }
  }

 private:
  void start() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
      throw Error(Errc::kTransportError, std::string("socketpair: ") + std::strerror(errno));
    }
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw Error(Errc::kTransportError, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
    pid_ = pid;
    buffer_.clear();
  }

  void stop() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void send_all(const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::kTransportError, argv_[0] + ": write failed: " + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        throw Error(Errc::kTimeout, argv_[0] + " did not answer within " + std::to_string(timeout_.count()) + " ms");
      }
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::kTransportError, std::string("poll: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[65536];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::kTransportError, argv_[0] + ": read failed: " + std::strerror(errno));
      }
      if (n == 0) throw Error(Errc::kTransportError, argv_[0] + " closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  BackendInfo info_;
  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  int fd_ = -1;
  pid_t pid_ = -1;
  std::string buffer_;
};

}  // namespace avsz::bridge
