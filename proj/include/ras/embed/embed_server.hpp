#pragma once

#include <memory>
#include <string>
#include <thread>

#include "ras/embed/embedder.hpp"

namespace httplib {
class Server;
}

namespace ras::embed {

/// Serves any backend over the embed protocol. Used as the mock sidecar and
/// as the reference side of protocol conformance tests.
class EmbedServer {
 public:
  explicit EmbedServer(std::shared_ptr<EmbedBackend> backend);
  ~EmbedServer();
  EmbedServer(const EmbedServer&) = delete;
  EmbedServer& operator=(const EmbedServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port. Throws IoError when binding fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] std::string base_url() const;

 private:
  void install_routes();

  std::shared_ptr<EmbedBackend> backend_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace ras::embed
