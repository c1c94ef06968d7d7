#include "ras/embed/http_embedder.hpp"

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "ras/common/error.hpp"
#include "ras/embed/protocol.hpp"

namespace ras::embed {

namespace {

bool is_timeout(httplib::Error e) {
  return e == httplib::Error::Read || e == httplib::Error::ConnectionTimeout;
}

template <class Rep, class Period>
void set_timeouts(httplib::Client& client, std::chrono::duration<Rep, Period> connect,
                  std::chrono::duration<Rep, Period> io) {
  client.set_connection_timeout(connect);
  client.set_read_timeout(io);
  client.set_write_timeout(io);
}

std::string error_message(const httplib::Response& res) {
  return std::to_string(res.status) + " " + res.body.substr(0, 200);
}

}  // namespace

HttpEmbedder::HttpEmbedder(HttpEmbedderOptions options) : options_(std::move(options)) {
  const auto& url = options_.base_url;
  if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0)
    throw ConfigError("embedder URL must start with http:// or https://, got '" + url + "'");
  if (!httplib::Client(url).is_valid()) throw ConfigError("invalid embedder URL '" + url + "'");
  if (options_.timeout_retries < 0) throw ConfigError("timeout_retries must be >= 0");
}

EmbedResponse HttpEmbedder::embed(const EmbedRequest& request) {
  const std::string body = protocol::encode_request(request);
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(options_.base_url);
    set_timeouts(client, options_.connect_timeout, options_.timeout);
    auto res = client.Post(std::string(protocol::kEmbedPath), body, "application/json");
    if (!res) {
      const auto err = res.error();
      if (is_timeout(err)) {
        if (attempt < options_.timeout_retries) {
          spdlog::warn("embedder timed out (request {}), retrying", request.request_id);
          continue;
        }
        throw Timeout("embedder at " + options_.base_url + " timed out after " +
                      std::to_string(attempt + 1) + " attempt(s)");
      }
      throw UpstreamUnavailable("embedder at " + options_.base_url + " unreachable: " +
                                httplib::to_string(err));
    }
    if (res->status == 200) {
      auto decoded = protocol::decode_response(res->body);
      if (decoded.request_id != request.request_id)
        throw InvalidEmbedding("embedder answered request '" + decoded.request_id + "' for '" +
                               request.request_id + "'");
      return decoded;
    }
    if (res->status == 422) throw InvalidImage("embedder rejected payload: " + error_message(*res));
    if (res->status == 400) throw InvalidArgument("embedder rejected request: " + error_message(*res));
    throw UpstreamUnavailable("embedder error " + error_message(*res));
  }
}

EmbedderHealth HttpEmbedder::health() noexcept {
  try {
    httplib::Client client(options_.base_url);
    set_timeouts(client, options_.connect_timeout, options_.connect_timeout);
    auto res = client.Get(std::string(protocol::kHealthPath));
    if (!res) return {{}, 0, false, false, "unreachable: " + httplib::to_string(res.error())};
    if (res->status != 200) {
      EmbedderHealth h;
      h.detail = "health returned " + std::to_string(res->status);
      return h;
    }
    return protocol::decode_health(res->body);
  } catch (const std::exception& e) {
    return {{}, 0, false, false, e.what()};
  }
}

}  // namespace ras::embed
