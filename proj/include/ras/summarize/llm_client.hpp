#pragma once

#include <chrono>
#include <string>

namespace ras::summarize {

struct ChatRequest {
  std::string system;
  std::string user;
};

struct ChatReply {
  std::string text;
  std::string model_id;
};

/// Errors: Timeout when the call exceeds its deadline, UpstreamUnavailable
/// for every other transport or server failure.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual ChatReply complete(const ChatRequest& request) = 0;
  /// Cheap reachability probe; never throws.
  virtual bool reachable() noexcept = 0;
};

struct OpenAiClientOptions {
  /// Up to and including the version prefix, e.g. "http://127.0.0.1:8080/v1".
  std::string base_url;
  std::string model;
  /// Sent as a bearer token when non-empty.
  std::string api_key;
  int max_tokens = 512;
  double temperature = 0.2;
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds connect_timeout{5'000};
};

/// Chat-completions client for any OpenAI-compatible endpoint.
class OpenAiChatClient final : public LlmClient {
 public:
  /// Throws ConfigError for a malformed base URL or empty model name.
  explicit OpenAiChatClient(OpenAiClientOptions options);

  ChatReply complete(const ChatRequest& request) override;
  bool reachable() noexcept override;

  [[nodiscard]] const OpenAiClientOptions& options() const noexcept { return options_; }

 private:
  OpenAiClientOptions options_;
  std::string origin_;
  std::string path_prefix_;
};

}  // namespace ras::summarize
