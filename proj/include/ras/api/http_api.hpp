#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ras/api/service.hpp"

namespace httplib {
class Server;
}

namespace ras::api {

struct HttpApiOptions {
  /// When set, POST /corpus/documents requires "Authorization: Bearer <token>".
  std::string bearer_token;
  /// Origins granted CORS access; "*" allows any.
  std::vector<std::string> cors_origins;
  /// Per-client request budget; 0 disables rate limiting.
  double rate_limit_per_s = 0.0;
  double rate_limit_burst = 20.0;
  std::size_t max_body_bytes = 256u << 20;
  int worker_threads = 8;
};

/// HTTP status for an engine error.
int http_status_for(const std::exception& error) noexcept;

/// JSON encoders shared with the CLI. Keys are emitted in sorted order.
std::string encode_search_response(const SearchResponse& response);
std::string encode_result(const SearchResult& result);

/// JSON/HTTP front end of a SearchService.
class HttpApi {
 public:
  HttpApi(std::shared_ptr<SearchService> service, HttpApiOptions options = {});
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Throws IoError when binding fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Binds, then serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] std::string base_url() const;

 private:
  struct Impl;

  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace ras::api
