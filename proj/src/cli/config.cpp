#include "ras/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "json.hpp"
#include "ras/common/error.hpp"

namespace ras::cli {

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s.empty() || s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_integral_v<T>)
      out = static_cast<T>(std::stol(v, &used));
    else
      out = static_cast<T>(std::stod(v, &used));
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto end = std::min(v.find(',', start), v.size());
    auto item = v.substr(start, end - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

}  // namespace

ConfigLayer env_layer(const std::function<const char*(const char*)>& getenv) {
  ConfigLayer layer;
  for (const auto& key : config_keys()) {
    std::string name = "RAS_" + key;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
    if (const char* v = getenv(name.c_str()); v != nullptr) layer[key] = v;
  }
  return layer;
}

ConfigLayer file_layer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
  ConfigLayer layer;
  for (const auto& [key, value] : doc.items()) {
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
      throw ConfigError(path.string() + ": unknown key '" + key + "'");
    if (value.is_string()) {
      layer[key] = value.get<std::string>();
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) joined += (joined.empty() ? "" : ",") + item.get<std::string>();
      layer[key] = joined;
    } else {
      layer[key] = value.dump();
    }
  }
  return layer;
}

CliConfig resolve_config(const ConfigLayer& flags, const ConfigLayer& env, const ConfigLayer& file) {
  ConfigLayer merged = file;
  for (const auto& [k, v] : env) merged[k] = v;
  for (const auto& [k, v] : flags) merged[k] = v;

  CliConfig c;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = merged.find(key);
    return it == merged.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("corpus_dir"); v && !v->empty()) c.corpus_dir = *v;
  if (const auto* v = get("embedder_url")) c.embedder_url = *v;
  if (const auto* v = get("llm_url")) c.llm_url = *v;
  if (const auto* v = get("llm_model"); v && !v->empty()) c.llm_model = *v;
  if (const auto* v = get("llm_api_key")) c.llm_api_key = *v;
  if (const auto* v = get("mock")) c.mock_mode = parse_bool("mock", *v);
  if (const auto* v = get("log_level"); v && !v->empty()) c.log_level = *v;
  if (const auto* v = get("host"); v && !v->empty()) c.host = *v;
  if (const auto* v = get("port")) c.port = parse_number<int>("port", *v);
  if (const auto* v = get("api_token")) c.api_token = *v;
  if (const auto* v = get("cors_origins")) c.cors_origins = split_list(*v);
  if (const auto* v = get("rate_limit")) c.rate_limit = parse_number<double>("rate_limit", *v);

  if (c.mock_mode && !c.embedder_url.empty())
    throw ConfigError("mock mode cannot be combined with an embedder URL");
  if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range: " + std::to_string(c.port));
  static const std::vector<std::string> levels{"trace", "debug", "info", "warn", "error", "critical", "off"};
  if (std::find(levels.begin(), levels.end(), c.log_level) == levels.end())
    throw ConfigError("unknown log level '" + c.log_level + "'");
  return c;
}

}  // namespace ras::cli
