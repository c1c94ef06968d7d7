#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ras/scoring/embedding_matrix.hpp"

namespace ras::embed {

enum class EmbedKind { text, image };

std::string_view to_string(EmbedKind kind) noexcept;
/// Throws InvalidArgument for anything other than "text" or "image".
EmbedKind parse_kind(std::string_view name);

/// `payload` holds UTF-8 text or raw image bytes.
struct EmbedRequest {
  EmbedKind kind = EmbedKind::text;
  std::string payload;
  std::string request_id;
};

struct EmbedResponse {
  std::string request_id;
  scoring::EmbeddingMatrix matrix;
  bool normalized = false;
  std::string model_id;
};

struct EmbedderHealth {
  std::string model_id;
  std::size_t dim = 0;
  bool normalized = false;
  bool ready = false;
  /// Reason when not ready.
  std::string detail;
};

/// Something that turns one request into one embedding: the in-process mock
/// or a remote sidecar. Implementations must be safe for concurrent callers.
class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  virtual EmbedResponse embed(const EmbedRequest& request) = 0;
  /// Never throws; an unreachable backend reports ready == false.
  virtual EmbedderHealth health() noexcept = 0;
};

/// Batch image interface consumed by ingestion.
class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  /// One matrix per input, in order. Throws on the first failure.
  virtual std::vector<scoring::EmbeddingMatrix> embed_images(std::span<const std::string> images) = 0;
};

}  // namespace ras::embed
