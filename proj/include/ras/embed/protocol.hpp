#pragma once

#include <string>
#include <string_view>

#include "ras/embed/embedder.hpp"

namespace ras::embed::protocol {

// POST /embed
//   request:  {"kind": "text"|"image", "text" | "payload_base64", "request_id"}
//   response: {"request_id", "rows", "dim", "normalized", "model_id",
//              "values_base64"}  (f32 little-endian, row-major)
// GET /health
//   response: {"model_id", "dim", "normalized", "ready"}
inline constexpr std::string_view kEmbedPath = "/embed";
inline constexpr std::string_view kHealthPath = "/health";

std::string encode_request(const EmbedRequest& request);
/// Throws InvalidArgument for malformed JSON or missing fields.
EmbedRequest decode_request(std::string_view body);

std::string encode_response(const EmbedResponse& response);
/// Throws InvalidEmbedding when the body is malformed or the value count
/// disagrees with rows x dim.
EmbedResponse decode_response(std::string_view body);

std::string encode_health(const EmbedderHealth& health);
EmbedderHealth decode_health(std::string_view body);

std::string encode_error(std::string_view code, std::string_view message);

/// Little-endian f32 packing of the matrix values.
std::string pack_values(const scoring::EmbeddingMatrix& matrix);
scoring::EmbeddingMatrix unpack_values(std::string_view bytes, std::size_t rows, std::size_t dim);

}  // namespace ras::embed::protocol
