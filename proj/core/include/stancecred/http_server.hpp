#pragma once

#include <memory>
#include <string>

#include "stancecred/serve.hpp"

namespace stancecred {

/// Thin wrapper around the HTTP listener so callers (CLI, tests) can bind,
/// run and stop it without seeing the underlying library.
class HttpScoreServer {
 public:
  explicit HttpScoreServer(const ScoringService& service, std::ostream* log = nullptr);
  ~HttpScoreServer();

  HttpScoreServer(const HttpScoreServer&) = delete;
  HttpScoreServer& operator=(const HttpScoreServer&) = delete;

  /// Binds to an OS-assigned free port; returns it. Throws IoError on failure.
  int bind_any_port(const std::string& host);
  /// Blocking accept loop after bind_any_port.
  bool listen_after_bind();
  /// Bind + blocking accept loop. Throws IoError when the bind fails.
  void listen(const std::string& host, int port);
  /// Safe to call from another thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stancecred
