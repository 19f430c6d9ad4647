#pragma once

// Out-of-process classifier speaking newline-delimited JSON over the child's
// stdin/stdout:
//   -> {"op":"handshake"}                      <- {"n_classes":K,"m_features":M}
//   -> {"op":"predict","id":N,"X":[[...],...]} <- {"id":N,"y":[...]}
// Child lines starting with '#' are log output and are skipped.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmxai/models.hpp"

namespace swarmxai {

namespace detail {

class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv) {
    if (argv.empty()) throw ModelError("remote model: empty command");
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ModelError("remote model: pipe failed");
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw ModelError("remote model: pipe failed");
    }
    // exec failure is reported through this pipe; a successful exec closes it.
    int err_pipe[2];
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) throw ModelError("remote model: pipe failed");

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) throw ModelError("remote model: fork failed");
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      const int e = errno;
      [[maybe_unused]] auto n = ::write(err_pipe[1], &e, sizeof(e));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];

    int child_errno = 0;
    const auto got = ::read(err_pipe[0], &child_errno, sizeof(child_errno));
    ::close(err_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof(child_errno))) {
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
      close_fds();
      throw ModelError("remote model: cannot spawn '" + argv[0] + "': " + std::strerror(child_errno));
    }
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    close_fds();
    if (pid_ > 0) {
      // closing stdin asks a well-behaved worker to exit
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        ::usleep(10000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string buf = line + "\n";
    std::size_t off = 0;
    while (off < buf.size()) {
      const auto n = ::write(to_child_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("remote model: child closed its input (exited?)");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw ProtocolError("remote model: timed out waiting for response");
      pollfd pfd{from_child_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) throw ProtocolError("remote model: timed out waiting for response");
      char chunk[65536];
      const auto n = ::read(from_child_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw ProtocolError("remote model: child exited before responding");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  void close_fds() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
  }

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace detail

/// Model backed by a long-lived child process. Requests from concurrent
/// callers are serialised over the single connection.
class RemoteModel final : public Model {
 public:
  struct Shape {
    std::size_t n_classes;
    std::size_t n_features;
  };

  static std::shared_ptr<RemoteModel> spawn(const std::vector<std::string>& argv,
                                            std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
    auto child = std::make_unique<detail::ChildProcess>(argv);
    const Shape shape = handshake(*child, timeout);
    return std::shared_ptr<RemoteModel>(new RemoteModel(std::move(child), shape, timeout, argv));
  }

  ModelKind kind() const noexcept override { return ModelKind::remote; }
  const std::vector<std::string>& command() const noexcept { return argv_; }

 protected:
  Labels do_predict(const Matrix& X) const override {
    std::lock_guard lock(mu_);
    const long id = next_id_++;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < X.rows(); ++r) {
      auto row = X.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    child_->write_line(nlohmann::json{{"op", "predict"}, {"id", id}, {"X", std::move(rows)}}.dump());
    const nlohmann::json resp = read_response(*child_, timeout_);
    if (!resp.is_object() || !resp.contains("id") || !resp.contains("y") || !resp["y"].is_array()) {
      throw ProtocolError("remote model: malformed predict response: " + resp.dump());
    }
    if (!resp["id"].is_number_integer() || resp["id"].get<long>() != id) {
      throw ProtocolError("remote model: response id " + resp["id"].dump() + " does not match request " +
                          std::to_string(id));
    }
    const auto& y = resp["y"];
    if (y.size() != X.rows()) {
      throw ProtocolError("remote model: expected " + std::to_string(X.rows()) + " labels, got " +
                          std::to_string(y.size()));
    }
    Labels out;
    out.reserve(y.size());
    for (const auto& v : y) {
      if (!v.is_number_integer()) throw ProtocolError("remote model: non-integer label " + v.dump());
      const auto label = v.get<long>();
      if (label < 0 || static_cast<std::size_t>(label) >= n_classes()) {
        throw ProtocolError("remote model: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(n_classes()) + ")");
      }
      out.push_back(static_cast<ClassId>(label));
    }
    return out;
  }

 private:
  RemoteModel(std::unique_ptr<detail::ChildProcess> child, Shape shape, std::chrono::milliseconds timeout,
              std::vector<std::string> argv)
      : Model(shape.n_classes, shape.n_features),
        child_(std::move(child)),
        timeout_(timeout),
        argv_(std::move(argv)) {}

  static nlohmann::json read_response(detail::ChildProcess& child, std::chrono::milliseconds timeout) {
    for (;;) {
      std::string line = child.read_line(timeout);
      if (!line.empty() && line.front() == '#') continue;
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded()) throw ProtocolError("remote model: malformed line: " + line);
      return parsed;
    }
  }

  static Shape handshake(detail::ChildProcess& child, std::chrono::milliseconds timeout) {
    child.write_line(R"({"op":"handshake"})");
    const auto resp = read_response(child, timeout);
    if (!resp.is_object() || !resp.contains("n_classes") || !resp.contains("m_features") ||
        !resp["n_classes"].is_number_unsigned() || !resp["m_features"].is_number_unsigned()) {
      throw ProtocolError("remote model: malformed handshake: " + resp.dump());
    }
    Shape s{resp["n_classes"].get<std::size_t>(), resp["m_features"].get<std::size_t>()};
    if (s.n_classes < 2 || s.n_features < 1) throw ProtocolError("remote model: degenerate handshake shape");
    return s;
  }

  mutable std::mutex mu_;
  mutable long next_id_ = 0;
  std::unique_ptr<detail::ChildProcess> child_;
  std::chrono::milliseconds timeout_;
  std::vector<std::string> argv_;
};

}  // namespace swarmxai
