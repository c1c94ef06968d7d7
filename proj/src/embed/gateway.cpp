#include "ras/embed/gateway.hpp"

#include <algorithm>

#include "ras/common/error.hpp"
#include "ras/embed/image_probe.hpp"
#include "ras/embed/mock_embedder.hpp"

namespace ras::embed {

EmbedderGateway::EmbedderGateway(std::shared_ptr<EmbedBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
  if (!backend_) throw ConfigError("embedder gateway needs a backend");
}

EmbedResponse EmbedderGateway::embed_text_response(std::string_view text) {
  if (count_tokens(text) == 0) throw InvalidArgument("query text is empty");
  return call(EmbedKind::text, std::string(text));
}

EmbedResponse EmbedderGateway::embed_image_response(std::string_view bytes) {
  probe_image(bytes);
  return call(EmbedKind::image, std::string(bytes));
}

std::vector<scoring::EmbeddingMatrix> EmbedderGateway::embed_images(std::span<const std::string> images) {
  std::vector<scoring::EmbeddingMatrix> out;
  out.reserve(images.size());
  for (const auto& image : images) out.push_back(embed_image(image));
  return out;
}

EmbedResponse EmbedderGateway::call(EmbedKind kind, std::string payload) {
  EmbedRequest request{kind, std::move(payload), "req-" + std::to_string(next_request_++)};
  EmbedResponse response = backend_->embed(request);

  const auto& m = response.matrix;
  if (m.rows() == 0) throw InvalidEmbedding("embedder returned no rows");
  if (const auto want = expected_dim(); want && m.dim() != *want)
    throw ConfigError("embedder '" + response.model_id + "' returned dim " + std::to_string(m.dim()) +
                      ", expected " + std::to_string(*want));
  m.require_finite();
  return response;
}

EmbedderHealth EmbedderGateway::health() {
  std::lock_guard lock(mutex_);
  const auto now = std::chrono::steady_clock::now();
  if (cached_health_ && now - health_at_ < options_.health_ttl) return *cached_health_;
  cached_health_ = backend_->health();
  health_at_ = now;
  return *cached_health_;
}

void EmbedderGateway::invalidate_health() {
  std::lock_guard lock(mutex_);
  cached_health_.reset();
}

void EmbedderGateway::set_expected_dim(std::optional<std::size_t> dim) {
  std::lock_guard lock(mutex_);
  options_.expected_dim = dim;
}

std::optional<std::size_t> EmbedderGateway::expected_dim() const {
  std::lock_guard lock(mutex_);
  return options_.expected_dim;
}

}  // namespace ras::embed
