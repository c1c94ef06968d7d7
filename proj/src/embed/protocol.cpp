#include "ras/embed/protocol.hpp"

#include <bit>
#include <cstdint>

#include "json.hpp"

#include "ras/common/base64.hpp"
#include "ras/common/error.hpp"

namespace ras::embed::protocol {

using nlohmann::json;

namespace {

json parse_object(std::string_view body, const char* what) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidArgument(std::string(what) + " is not a JSON object");
  return j;
}

template <class T>
T field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw InvalidArgument(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("field '") + name + "' has the wrong type");
  }
}

std::string to_string(std::span<const std::byte> bytes) {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

}  // namespace

std::string encode_request(const EmbedRequest& request) {
  json j{{"kind", embed::to_string(request.kind)}, {"request_id", request.request_id}};
  if (request.kind == EmbedKind::text)
    j["text"] = request.payload;
  else
    j["payload_base64"] = base64_encode(as_bytes(request.payload));
  return j.dump();
}

EmbedRequest decode_request(std::string_view body) {
  const json j = parse_object(body, "request");
  EmbedRequest req;
  req.kind = parse_kind(field<std::string>(j, "kind"));
  req.request_id = j.value("request_id", std::string());
  if (req.kind == EmbedKind::text)
    req.payload = field<std::string>(j, "text");
  else
    req.payload = to_string(base64_decode(field<std::string>(j, "payload_base64")));
  return req;
}

std::string pack_values(const scoring::EmbeddingMatrix& matrix) {
  std::string out;
  out.reserve(matrix.values().size() * 4);
  for (float v : matrix.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  return out;
}

scoring::EmbeddingMatrix unpack_values(std::string_view bytes, std::size_t rows, std::size_t dim) {
  if (dim == 0 || bytes.size() != rows * dim * 4)
    throw InvalidEmbedding("values_base64 holds " + std::to_string(bytes.size()) + " bytes, expected " +
                           std::to_string(rows * dim * 4));
  std::vector<float> values(rows * dim);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < values.size(); ++i, p += 4) {
    const std::uint32_t bits = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
                               std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
    values[i] = std::bit_cast<float>(bits);
  }
  return {rows, dim, std::move(values)};
}

std::string encode_response(const EmbedResponse& response) {
  const auto& m = response.matrix;
  const std::string packed = pack_values(m);
  return json{{"request_id", response.request_id},
              {"rows", m.rows()},
              {"dim", m.dim()},
              {"normalized", response.normalized},
              {"model_id", response.model_id},
              {"values_base64", base64_encode(as_bytes(packed))}}
      .dump();
}

EmbedResponse decode_response(std::string_view body) {
  try {
    const json j = parse_object(body, "response");
    EmbedResponse res;
    res.request_id = field<std::string>(j, "request_id");
    const auto rows = field<std::size_t>(j, "rows");
    const auto dim = field<std::size_t>(j, "dim");
    res.normalized = field<bool>(j, "normalized");
    res.model_id = field<std::string>(j, "model_id");
    const auto raw = base64_decode(field<std::string>(j, "values_base64"));
    res.matrix = unpack_values(to_string(raw), rows, dim);
    return res;
  } catch (const InvalidArgument& e) {
    throw InvalidEmbedding(std::string("malformed embed response: ") + e.what());
  }
}

std::string encode_health(const EmbedderHealth& health) {
  return json{{"model_id", health.model_id},
              {"dim", health.dim},
              {"normalized", health.normalized},
              {"ready", health.ready}}
      .dump();
}

EmbedderHealth decode_health(std::string_view body) {
  const json j = parse_object(body, "health");
  EmbedderHealth h;
  h.model_id = j.value("model_id", std::string());
  h.dim = j.value("dim", std::size_t{0});
  h.normalized = j.value("normalized", false);
  h.ready = j.value("ready", false);
  return h;
}

std::string encode_error(std::string_view code, std::string_view message) {
  return json{{"error", code}, {"message", message}}.dump();
}

}  // namespace ras::embed::protocol
