#include "ras/embed/embed_server.hpp"

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "ras/common/error.hpp"
#include "ras/embed/image_probe.hpp"
#include "ras/embed/protocol.hpp"

namespace ras::embed {

EmbedServer::EmbedServer(std::shared_ptr<EmbedBackend> backend)
    : backend_(std::move(backend)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

EmbedServer::~EmbedServer() { stop(); }

void EmbedServer::install_routes() {
  server_->Post(std::string(protocol::kEmbedPath), [this](const httplib::Request& req,
                                                          httplib::Response& res) {
    auto reply = [&res](int status, std::string_view code, std::string_view message) {
      res.status = status;
      res.set_content(protocol::encode_error(code, message), "application/json");
    };
    try {
      const auto request = protocol::decode_request(req.body);
      if (request.kind == EmbedKind::image) probe_image(request.payload);
      const auto response = backend_->embed(request);
      res.set_content(protocol::encode_response(response), "application/json");
    } catch (const InvalidImage& e) {
      reply(422, "invalid_image", e.what());
    } catch (const InvalidArgument& e) {
      reply(400, "invalid_request", e.what());
    } catch (const std::exception& e) {
      spdlog::error("embed failed: {}", e.what());
      reply(500, "internal", e.what());
    }
  });
  server_->Get(std::string(protocol::kHealthPath), [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(protocol::encode_health(backend_->health()), "application/json");
  });
}

int EmbedServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw IoError("cannot bind embedder server to " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void EmbedServer::run(const std::string& host, int port) {
  host_ = host;
  if (!server_->bind_to_port(host, port))
    throw IoError("cannot bind embedder server to " + host + ":" + std::to_string(port));
  port_ = port;
  server_->listen_after_bind();
}

void EmbedServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string EmbedServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace ras::embed
