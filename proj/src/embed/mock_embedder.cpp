#include "ras/embed/mock_embedder.hpp"

#include <algorithm>
#include <cmath>

#include "ras/common/error.hpp"
#include "ras/common/fnv1a.hpp"

namespace ras::embed {

namespace {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string_view to_string(EmbedKind kind) noexcept {
  return kind == EmbedKind::text ? "text" : "image";
}

EmbedKind parse_kind(std::string_view name) {
  if (name == "text") return EmbedKind::text;
  if (name == "image") return EmbedKind::image;
  throw InvalidArgument("unknown embed kind '" + std::string(name) + "'");
}

std::size_t count_tokens(std::string_view text) noexcept {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = is_space(c);
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

std::uint64_t mock_row_seed(EmbedKind kind, std::string_view payload, std::uint32_t row) noexcept {
  Fnv1a64 h;
  h.update(static_cast<std::uint8_t>(kind == EmbedKind::text ? 0 : 1));
  h.update(payload);
  h.update_le(row, 4);
  return h.digest();
}

scoring::EmbeddingMatrix MockEmbedder::embed_payload(EmbedKind kind, std::string_view payload) const {
  std::size_t rows = 0;
  if (kind == EmbedKind::text) {
    rows = std::min(count_tokens(payload), kMockMaxTextRows);
    if (rows == 0) throw InvalidArgument("text payload is blank");
  } else {
    if (payload.empty()) throw InvalidArgument("image payload is empty");
    rows = kMockImageRows;
  }

  std::vector<float> values(rows * dim_);
  std::vector<double> row_values(dim_);
  for (std::size_t r = 0; r < rows; ++r) {
    XorShift64Star rng(mock_row_seed(kind, payload, static_cast<std::uint32_t>(r)));
    double norm2 = 0.0;
    for (auto& v : row_values) {
      v = rng.next_signed();
      norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    for (std::size_t k = 0; k < dim_; ++k)
      values[r * dim_ + k] = static_cast<float>(row_values[k] / norm);
  }
  return {rows, dim_, std::move(values)};
}

EmbedResponse MockEmbedder::embed(const EmbedRequest& request) {
  return {request.request_id, embed_payload(request.kind, request.payload), true,
          std::string(kMockModelId)};
}

EmbedderHealth MockEmbedder::health() noexcept {
  return {std::string(kMockModelId), dim_, true, true, {}};
}

}  // namespace ras::embed
