#pragma once

#include <chrono>
#include <string>

#include "ras/embed/embedder.hpp"

namespace ras::embed {

struct HttpEmbedderOptions {
  /// e.g. "http://127.0.0.1:8100"
  std::string base_url;
  std::chrono::milliseconds timeout{120'000};
  std::chrono::milliseconds connect_timeout{5'000};
  /// Extra attempts after a timed-out call.
  int timeout_retries = 1;
};

/// Client for a sidecar speaking the embed protocol. A fresh connection is
/// used per call, so concurrent callers never share state.
class HttpEmbedder final : public EmbedBackend {
 public:
  /// Throws ConfigError for an empty or malformed base URL.
  explicit HttpEmbedder(HttpEmbedderOptions options);

  /// Errors: Timeout after the retries are spent, UpstreamUnavailable when
  /// unreachable or on 5xx, InvalidImage on 422, InvalidArgument on 400,
  /// InvalidEmbedding for a response that breaks the protocol.
  EmbedResponse embed(const EmbedRequest& request) override;
  EmbedderHealth health() noexcept override;

  [[nodiscard]] const HttpEmbedderOptions& options() const noexcept { return options_; }

 private:
  HttpEmbedderOptions options_;
};

}  // namespace ras::embed
