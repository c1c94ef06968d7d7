#include "ras/api/http_api.hpp"

#include <chrono>
#include <map>
#include <mutex>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"
#include "ras/common/base64.hpp"
#include "ras/common/token_bucket.hpp"

namespace ras::api {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

json result_json(const SearchResult& r) {
  return {{"doc_id", r.doc_id},         {"title", r.title},
          {"image_url", r.image_url},   {"resource_url", r.resource_url},
          {"doc_type", r.doc_type},     {"collection", r.collection},
          {"score", r.score},           {"rank", r.rank}};
}

std::string error_code(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 401: return "unauthorized";
    case 404: return "not_found";
    case 409: return "duplicate_document";
    case 422: return "unprocessable";
    case 429: return "rate_limited";
    case 503: return "unavailable";
    default: return "internal";
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view message) {
  send_json(res, status, {{"error", {{"code", error_code(status)}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw InvalidArgument("request body must be a JSON object");
  return body;
}

std::size_t parse_k(const json& value) {
  if (value.is_null()) return scoring::kDefaultTopK;
  if (!value.is_number_integer()) throw InvalidArgument("k must be an integer");
  const auto k = value.get<std::int64_t>();
  if (k < 1 || k > static_cast<std::int64_t>(kMaxK))
    throw InvalidArgument("k must be between 1 and " + std::to_string(kMaxK));
  return static_cast<std::size_t>(k);
}

std::size_t parse_k(const std::string& text) {
  if (text.empty()) return scoring::kDefaultTopK;
  std::size_t used = 0;
  long long k = 0;
  try {
    k = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("k must be an integer");
  }
  if (used != text.size()) throw InvalidArgument("k must be an integer");
  return parse_k(json(k));
}

std::optional<std::string> optional_string(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvalidArgument(std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& body, const char* key) {
  std::vector<std::string> out;
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return out;
  if (!it->is_array()) throw InvalidArgument(std::string(key) + " must be an array of strings");
  for (const auto& v : *it) {
    if (!v.is_string()) throw InvalidArgument(std::string(key) + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool parse_flag(const std::string& text) {
  if (text.empty() || text == "false" || text == "0" || text == "no" || text == "off") return false;
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  throw InvalidArgument("invalid boolean '" + text + "'");
}

// Form field, falling back to the query string.
std::string field(const httplib::Request& req, const char* name) {
  if (req.has_file(name)) return req.get_file_value(name).content;
  return req.get_param_value(name);
}

std::optional<std::string> optional_field(const httplib::Request& req, const char* name) {
  auto v = field(req, name);
  if (v.empty()) return std::nullopt;
  return v;
}

json search_json(const SearchResponse& response) {
  json results = json::array();
  for (const auto& r : response.results) results.push_back(result_json(r));
  json out{{"results", std::move(results)},
           {"corpus_epoch", response.corpus_epoch},
           {"latency_ms", response.latency_ms}};
  if (response.session_epoch) out["session_epoch"] = *response.session_epoch;
  return out;
}

json add_json(const AddResponse& response) {
  json out{{"added", response.added}, {"corpus_epoch", response.corpus_epoch}};
  if (response.session_epoch) out["session_epoch"] = *response.session_epoch;
  return out;
}

}  // namespace

int http_status_for(const std::exception& error) noexcept {
  if (dynamic_cast<const NotReady*>(&error)) return 503;
  if (dynamic_cast<const InvalidArgument*>(&error) || dynamic_cast<const InvalidImage*>(&error) ||
      dynamic_cast<const IntegrityError*>(&error) || dynamic_cast<const ManifestError*>(&error))
    return 400;
  if (dynamic_cast<const NotFound*>(&error)) return 404;
  if (dynamic_cast<const DuplicateDocument*>(&error)) return 409;
  if (dynamic_cast<const DimensionError*>(&error) || dynamic_cast<const InvalidEmbedding*>(&error))
    return 422;
  if (dynamic_cast<const UpstreamUnavailable*>(&error) || dynamic_cast<const ConfigError*>(&error))
    return 503;
  return 500;
}

std::string encode_search_response(const SearchResponse& response) { return search_json(response).dump(); }

std::string encode_result(const SearchResult& result) { return result_json(result).dump(); }

struct HttpApi::Impl {
  Impl(std::shared_ptr<SearchService> s, HttpApiOptions o) : service(std::move(s)), options(std::move(o)) {}

  std::shared_ptr<SearchService> service;
  HttpApiOptions options;
  httplib::Server server;
  std::mutex buckets_mutex;
  std::map<std::string, std::unique_ptr<TokenBucket>> buckets;

  using Body = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Error mapping plus one structured log line per request.
  httplib::Server::Handler wrap(Body body) {
    return [this, body = std::move(body)](const httplib::Request& req, httplib::Response& res) {
      const auto started = Clock::now();
      try {
        body(req, res);
      } catch (const std::exception& e) {
        const int status = http_status_for(e);
        if (status >= 500) spdlog::warn("{} {} failed: {}", req.method, req.path, e.what());
        send_error(res, status, e.what());
      }
      const auto latency =
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
      const auto epoch = service->ready() ? std::to_string(service->snapshot()->epoch()) : "null";
      spdlog::info(R"({{"method":"{}","path":"{}","status":{},"latency_ms":{},"corpus_epoch":{}}})",
                   req.method, req.path, res.status, latency, epoch);
    };
  }

  bool authorized(const httplib::Request& req) const {
    if (options.bearer_token.empty()) return true;
    return req.get_header_value("Authorization") == "Bearer " + options.bearer_token;
  }

  bool allow_origin(const std::string& origin) const {
    for (const auto& o : options.cors_origins)
      if (o == "*" || o == origin) return true;
    return false;
  }

  bool rate_limited(const httplib::Request& req) {
    if (options.rate_limit_per_s <= 0.0) return false;
    std::lock_guard lock(buckets_mutex);
    auto& bucket = buckets[req.remote_addr];
    if (!bucket) bucket = std::make_unique<TokenBucket>(options.rate_limit_per_s, options.rate_limit_burst);
    return !bucket->try_acquire();
  }

  void install() {
    server.set_payload_max_length(options.max_body_bytes);
    const int threads = options.worker_threads;
    server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<size_t>(threads)); };

    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (req.path != "/health" && rate_limited(req)) {
        send_error(res, 429, "too many requests");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
    server.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      const auto origin = req.get_header_value("Origin");
      if (origin.empty() || !allow_origin(origin)) return;
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
    });
    server.Options(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto origin = req.get_header_value("Origin");
      if (origin.empty() || !allow_origin(origin)) {
        res.status = 403;
        return;
      }
      res.status = 204;
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
      res.set_header("Access-Control-Max-Age", "600");
    });

    server.Post("/search", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      SearchRequest request;
      const auto query = optional_string(body, "query");
      if (!query) throw InvalidArgument("query is required");
      request.query = *query;
      request.k = parse_k(body.value("k", json()));
      request.session_id = optional_string(body, "session_id");
      send_json(res, 200, search_json(service->search_text(request)));
    }));

    server.Post("/search/image", wrap([this](const httplib::Request& req, httplib::Response& res) {
      std::string image;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("image")) throw InvalidImage("multipart field 'image' is required");
        image = req.get_file_value("image").content;
      } else {
        image = req.body;
      }
      const auto k = parse_k(field(req, "k"));
      send_json(res, 200, search_json(service->search_image(image, k, optional_field(req, "session_id"))));
    }));

    server.Post("/corpus/documents", wrap([this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req)) {
        send_error(res, 401, "missing or invalid bearer token");
        return;
      }
      AddRequest request;
      request.persist = parse_flag(field(req, "persist"));
      request.session_id = optional_field(req, "session_id");
      if (req.has_file("shard")) {
        const auto shard = req.get_file_value("shard").content;
        const auto meta = req.has_file("metadata") ? req.get_file_value("metadata").content : std::string();
        send_json(res, 200, add_json(service->import_shard(shard, meta, request)));
        return;
      }
      std::vector<UploadedImage> images;
      for (const char* name : {"images", "image"})
        for (const auto& f : req.get_file_values(name)) images.push_back({f.content, "", ""});
      if (images.empty() && !req.is_multipart_form_data() && !req.body.empty())
        images.push_back({req.body, "", ""});
      if (images.empty()) throw InvalidArgument("no images uploaded");
      const auto ids = req.get_file_values("doc_id");
      const auto titles = req.get_file_values("title");
      for (std::size_t i = 0; i < images.size(); ++i) {
        if (i < ids.size()) images[i].doc_id = ids[i].content;
        if (i < titles.size()) images[i].title = titles[i].content;
      }
      if (images.size() == 1) {
        if (ids.empty()) images[0].doc_id = req.get_param_value("doc_id");
        if (titles.empty()) images[0].title = req.get_param_value("title");
      }
      send_json(res, 200, add_json(service->add_images(std::move(images), request)));
    }));

    server.Post("/corpus/export", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      const auto exported = service->export_shard(string_list(body, "doc_ids"));
      send_json(res, 200,
                {{"shard_base64", base64_encode(as_bytes(exported.shard_bytes))},
                 {"metadata_csv", exported.metadata_csv}});
    }));

    server.Post("/analyze", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      const auto result = service->analyze(string_list(body, "doc_ids"), optional_string(body, "session_id"));
      send_json(res, 200,
                {{"text", result.text},
                 {"model_id", result.model_id},
                 {"latency_ms", result.latency_ms},
                 {"attempts", result.attempts},
                 {"digest_size", result.digest_size}});
    }));

    server.Get("/corpus/stats", wrap([this](const httplib::Request&, httplib::Response& res) {
      const auto s = service->stats();
      send_json(res, 200,
                {{"documents", s.documents},
                 {"shards", s.shards},
                 {"dim", s.dim},
                 {"epoch", s.epoch},
                 {"memory_bytes", s.memory_bytes}});
    }));

    server.Get("/health", wrap([this](const httplib::Request&, httplib::Response& res) {
      const auto h = service->health();
      json corpus{{"loaded", h.corpus_loaded}, {"documents", h.documents}, {"epoch", h.epoch}};
      if (!h.corpus_error.empty()) corpus["error"] = h.corpus_error;
      json embedder{{"ready", h.embedder.ready},
                    {"model_id", h.embedder.model_id},
                    {"dim", h.embedder.dim},
                    {"normalized", h.embedder.normalized}};
      if (!h.embedder.detail.empty()) embedder["detail"] = h.embedder.detail;
      send_json(res, 200,
                {{"status", h.status()},
                 {"corpus", std::move(corpus)},
                 {"embedder", std::move(embedder)},
                 {"llm", {{"configured", h.llm_configured}, {"ready", h.llm_ready}}},
                 {"search_available", h.search_available()},
                 {"analyze_available", h.analyze_available()}});
    }));
  }
};

HttpApi::HttpApi(std::shared_ptr<SearchService> service, HttpApiOptions options)
    : impl_(std::make_unique<Impl>(std::move(service), std::move(options))) {
  impl_->install();
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::start(const std::string& host, int port) {
  host_ = host;
  auto& server = impl_->server;
  port_ = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw IoError("cannot bind API server to " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
  return port_;
}

void HttpApi::run(const std::string& host, int port) {
  host_ = host;
  if (!impl_->server.bind_to_port(host, port))
    throw IoError("cannot bind API server to " + host + ":" + std::to_string(port));
  port_ = port;
  spdlog::info("listening on {}:{}", host, port);
  impl_->server.listen_after_bind();
}

void HttpApi::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string HttpApi::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace ras::api
