#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "ras/embed/embedder.hpp"

namespace ras::embed {

struct GatewayOptions {
  /// Responses with another dim are rejected with ConfigError. Unset accepts
  /// whatever the backend produces.
  std::optional<std::size_t> expected_dim = 128;
  std::chrono::milliseconds health_ttl{30'000};
};

/// Engine-side entry point for embeddings: validates inputs before they
/// leave the process and responses before they reach the corpus.
class EmbedderGateway final : public ImageEmbedder {
 public:
  explicit EmbedderGateway(std::shared_ptr<EmbedBackend> backend, GatewayOptions options = {});

  /// Throws InvalidArgument for blank text.
  EmbedResponse embed_text_response(std::string_view text);
  /// Throws InvalidImage unless the bytes decode as JPEG, PNG or TIFF.
  EmbedResponse embed_image_response(std::string_view bytes);

  scoring::EmbeddingMatrix embed_text(std::string_view text) {
    return embed_text_response(text).matrix;
  }
  scoring::EmbeddingMatrix embed_image(std::string_view bytes) {
    return embed_image_response(bytes).matrix;
  }

  std::vector<scoring::EmbeddingMatrix> embed_images(std::span<const std::string> images) override;

  /// Cached for health_ttl; never throws.
  EmbedderHealth health();
  void invalidate_health();

  void set_expected_dim(std::optional<std::size_t> dim);
  [[nodiscard]] std::optional<std::size_t> expected_dim() const;

  [[nodiscard]] EmbedBackend& backend() noexcept { return *backend_; }

 private:
  EmbedResponse call(EmbedKind kind, std::string payload);

  std::shared_ptr<EmbedBackend> backend_;
  GatewayOptions options_;
  mutable std::mutex mutex_;
  std::optional<EmbedderHealth> cached_health_;
  std::chrono::steady_clock::time_point health_at_;
  std::atomic<std::uint64_t> next_request_{0};
};

}  // namespace ras::embed
