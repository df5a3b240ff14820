#include "lexchain/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "lexchain/errors.hpp"

using nlohmann::json;

namespace lexchain {

const std::string& AppConfig::resolve_model(const std::string& alias) const {
  auto it = models.find(alias);
  return it == models.end() ? alias : it->second;
}

AppConfig parse_app_config(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ConfigError("config file is not a JSON object");
  }
  AppConfig config;
  config.base_url = doc.value("base_url", config.base_url);
  config.completions_path = doc.value("completions_path", config.completions_path);
  config.api_key_env = doc.value("api_key_env", config.api_key_env);
  if (doc.contains("models")) {
    if (!doc.at("models").is_object()) {
      throw ConfigError("config 'models' must map aliases to wire model ids");
    }
    for (const auto& [alias, wire] : doc.at("models").items()) {
      config.models[alias] = wire.get<std::string>();
    }
  }
  config.temperature = doc.value("temperature", config.temperature);
  config.parallelism = doc.value("parallelism", config.parallelism);
  config.cache_path = doc.value("cache_path", config.cache_path);
  config.templates_dir = doc.value("templates_dir", config.templates_dir);
  config.bank_path = doc.value("bank_path", config.bank_path);
  if (doc.contains("constraint_mode")) {
    auto mode = constraint_mode_from_string(doc.at("constraint_mode").get<std::string>());
    if (!mode) {
      throw ConfigError("config constraint_mode must be 'observe' or 'enforce'");
    }
    config.constraint_mode = *mode;
  }
  if (doc.contains("report_formats")) {
    config.report_formats = doc.at("report_formats").get<std::vector<std::string>>();
    for (const auto& f : config.report_formats) {
      if (f != "text" && f != "csv" && f != "json") {
        throw ConfigError("unknown report format '" + f + "'");
      }
    }
  }
  config.max_attempts = doc.value("max_attempts", config.max_attempts);
  config.backoff_base_ms = doc.value("backoff_base_ms", config.backoff_base_ms);
  config.backoff_cap_ms = doc.value("backoff_cap_ms", config.backoff_cap_ms);
  config.timeout_ms = doc.value("timeout_ms", config.timeout_ms);

  if (config.parallelism < 1) {
    throw ConfigError("parallelism must be >= 1");
  }
  if (config.temperature < 0.0) {
    throw ConfigError("temperature must be non-negative");
  }
  if (config.max_attempts < 1) {
    throw ConfigError("max_attempts must be >= 1");
  }
  return config;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_app_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace lexchain
