#include "ras/summarize/llm_client.hpp"

#include "httplib.h"
#include "json.hpp"
#include "ras/common/error.hpp"

namespace ras::summarize {

using nlohmann::json;

namespace {

template <class Rep, class Period>
void set_timeouts(httplib::Client& client, std::chrono::duration<Rep, Period> connect,
                  std::chrono::duration<Rep, Period> io) {
  client.set_connection_timeout(connect);
  client.set_read_timeout(io);
  client.set_write_timeout(io);
}

}  // namespace

OpenAiChatClient::OpenAiChatClient(OpenAiClientOptions options) : options_(std::move(options)) {
  const auto& url = options_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || (url.compare(0, scheme_end, "http") != 0 &&
                                          url.compare(0, scheme_end, "https") != 0))
    throw ConfigError("LLM URL must start with http:// or https://, got '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (!httplib::Client(origin_).is_valid()) throw ConfigError("invalid LLM URL '" + url + "'");
  if (options_.model.empty()) throw ConfigError("LLM model name is empty");
}

ChatReply OpenAiChatClient::complete(const ChatRequest& request) {
  const json body{{"model", options_.model},
                  {"messages",
                   json::array({{{"role", "system"}, {"content", request.system}},
                                {{"role", "user"}, {"content", request.user}}})},
                  {"max_tokens", options_.max_tokens},
                  {"temperature", options_.temperature},
                  {"stream", false}};

  httplib::Client client(origin_);
  set_timeouts(client, options_.connect_timeout, options_.timeout);
  if (!options_.api_key.empty()) client.set_bearer_token_auth(options_.api_key);
  auto res = client.Post(path_prefix_ + "/chat/completions", body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
      throw Timeout("LLM at " + options_.base_url + " timed out");
    throw UpstreamUnavailable("LLM at " + options_.base_url + " unreachable: " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw UpstreamUnavailable("LLM returned " + std::to_string(res->status) + ": " +
                              res->body.substr(0, 200));

  const json reply = json::parse(res->body, nullptr, false);
  try {
    ChatReply out;
    out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    out.model_id = reply.value("model", options_.model);
    return out;
  } catch (const json::exception&) {
    throw UpstreamUnavailable("LLM reply is not a chat completion: " + res->body.substr(0, 200));
  }
}

bool OpenAiChatClient::reachable() noexcept {
  try {
    httplib::Client client(origin_);
    set_timeouts(client, options_.connect_timeout, options_.connect_timeout);
    if (!options_.api_key.empty()) client.set_bearer_token_auth(options_.api_key);
    auto res = client.Get(path_prefix_ + "/models");
    return res && res->status < 500;
  } catch (...) {
    return false;
  }
}

}  // namespace ras::summarize
