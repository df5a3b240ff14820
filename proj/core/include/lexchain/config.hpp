#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lexchain/parser.hpp"

namespace lexchain {

// Declarative application configuration. Flags override config values; the
// API credential comes from the named environment variable only, never from
// the file or argv.
struct AppConfig {
  std::string base_url = "https://api.openai.com";
  std::string completions_path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::map<std::string, std::string> models;  // alias -> wire model id
  double temperature = 0.0;
  int parallelism = 4;
  std::string cache_path = "lexchain-cache.jsonl";
  std::string templates_dir;  // empty: bundled default
  std::string bank_path;      // empty: bundled default
  ConstraintMode constraint_mode = ConstraintMode::observe;
  std::vector<std::string> report_formats = {"text", "csv", "json"};
  int max_attempts = 3;
  int backoff_base_ms = 1000;
  int backoff_cap_ms = 30000;
  int timeout_ms = 120000;

  // Wire id for a model alias; unknown aliases pass through unchanged.
  const std::string& resolve_model(const std::string& alias) const;
};

AppConfig load_app_config(const std::filesystem::path& path);
AppConfig parse_app_config(const std::string& json_text);

}  // namespace lexchain
