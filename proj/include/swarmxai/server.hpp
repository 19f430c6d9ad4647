#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include <httplib.h>

#include "swarmxai/common.hpp"

namespace swarmxai {

inline constexpr const char* kFallbackIndex = R"html(<!doctype html>
<html><head><meta charset="utf-8"><title>swarm-xai</title></head>
<body>
<p>The viewer assets are not installed. The bundle is served at
<a href="/api/bundle">/api/bundle</a>.</p>
</body></html>
)html";

/// Read-only HTTP front for one bundle: GET /api/bundle returns the file
/// bytes, GET / serves the viewer assets. The bundle is loaded once.
class BundleServer {
 public:
  BundleServer(const std::string& bundle_path, const std::string& assets_dir = {},
               std::ostream* log = &std::cerr)
      : log_(log) {
    std::ifstream in(bundle_path, std::ios::binary);
    if (!in) throw Error("cannot open bundle '" + bundle_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    payload_ = ss.str();

    server_.Get("/api/bundle", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(payload_, "application/json");
    });
    server_.Get(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 404;
      res.set_content(R"({"error":"not found"})", "application/json");
    });
    if (!assets_dir.empty()) {
      if (!std::filesystem::is_directory(assets_dir)) throw Error("assets directory '" + assets_dir + "' not found");
      server_.set_mount_point("/", assets_dir);
    } else {
      server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kFallbackIndex, "text/html");
      });
    }
    server_.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
      if (!log_) return;
      std::lock_guard lock(log_mu_);
      *log_ << req.method << ' ' << req.path << ' ' << res.status << '\n';
    });
  }

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  /// Blocks until stop() is called.
  void listen() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
  httplib::Server server_;
  std::ostream* log_;
  std::mutex log_mu_;
};

}  // namespace swarmxai
