#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ras::cli {

/// Settings layer: key -> raw value. Keys are the snake_case names below.
using ConfigLayer = std::map<std::string, std::string>;

/// Keys understood in every layer.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "corpus_dir", "embedder_url", "llm_url",     "llm_model",    "llm_api_key",     "mock",
      "log_level",  "host",         "port",        "api_token",    "cors_origins",    "rate_limit"};
  return keys;
}

struct CliConfig {
  std::optional<std::filesystem::path> corpus_dir;
  std::string embedder_url;
  std::string llm_url;
  std::string llm_model = "default";
  std::string llm_api_key;
  bool mock_mode = false;
  std::string log_level = "info";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string api_token;
  std::vector<std::string> cors_origins;
  double rate_limit = 0.0;
};

/// RAS_<KEY> variables, e.g. RAS_CORPUS_DIR. `getenv` is injectable for tests.
ConfigLayer env_layer(const std::function<const char*(const char*)>& getenv);

/// JSON object file. Throws ConfigError when unreadable or malformed.
ConfigLayer file_layer(const std::filesystem::path& path);

/// Flags override the environment, which overrides the config file.
/// Throws ConfigError for unparseable values and for mock mode combined with
/// an embedder URL.
CliConfig resolve_config(const ConfigLayer& flags, const ConfigLayer& env, const ConfigLayer& file);

}  // namespace ras::cli
