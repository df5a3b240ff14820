#include "lexchain/mock_provider.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

using nlohmann::json;

namespace lexchain {
namespace {

ProviderErrorKind error_kind_from_string(const std::string& s) {
  if (s == "network") return ProviderErrorKind::network;
  if (s == "rate_limited") return ProviderErrorKind::rate_limited;
  if (s == "authentication") return ProviderErrorKind::authentication;
  if (s == "malformed_response") return ProviderErrorKind::malformed_response;
  throw ValidationError("unknown scripted error kind '" + s + "'");
}

}  // namespace

CompletionResult ScriptedMockProvider::complete(const CompletionRequest& request) {
  {
    std::lock_guard lock(mutex_);
    recorded_.push_back(request);
  }
  for (const auto& rule : script_.rules) {
    bool matches = rule.equals ? request.prompt_text == *rule.equals : !rule.contains.empty();
    for (const auto& needle : rule.contains) {
      if (request.prompt_text.find(needle) == std::string::npos) {
        matches = false;
        break;
      }
    }
    if (!matches) {
      continue;
    }
    if (rule.fail) {
      throw ProviderError(*rule.fail, "scripted failure for matched prompt");
    }
    CompletionResult result;
    result.raw_text = rule.response;
    result.finish_reason = rule.finish_reason;
    return result;
  }
  if (script_.default_response) {
    CompletionResult result;
    result.raw_text = *script_.default_response;
    return result;
  }
  throw ProviderError(ProviderErrorKind::unmatched_prompt,
                      "no script rule matches the prompt and no default response is set");
}

std::vector<CompletionRequest> ScriptedMockProvider::recorded_requests() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

size_t ScriptedMockProvider::call_count() const {
  std::lock_guard lock(mutex_);
  return recorded_.size();
}

MockScript parse_mock_script(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ValidationError("mock script must be a JSON object");
  }
  MockScript script;
  if (doc.contains("rules")) {
    if (!doc.at("rules").is_array()) {
      throw ValidationError("mock script 'rules' must be an array");
    }
    for (const auto& jr : doc.at("rules")) {
      ScriptRule rule;
      if (jr.contains("contains")) {
        const auto& jc = jr.at("contains");
        if (jc.is_string()) {
          rule.contains.push_back(jc.get<std::string>());
        } else if (jc.is_array()) {
          for (const auto& needle : jc) {
            rule.contains.push_back(needle.get<std::string>());
          }
        } else {
          throw ValidationError("mock script 'contains' must be a string or array of strings");
        }
      }
      if (jr.contains("equals")) {
        rule.equals = jr.at("equals").get<std::string>();
      }
      if (rule.contains.empty() && !rule.equals) {
        throw ValidationError("mock script rule needs 'contains' or 'equals'");
      }
      rule.response = jr.value("response", "");
      if (jr.contains("finish_reason")) {
        auto reason = finish_reason_from_string(jr.at("finish_reason").get<std::string>());
        if (!reason) {
          throw ValidationError("mock script rule has unknown finish_reason");
        }
        rule.finish_reason = *reason;
      }
      if (jr.contains("error")) {
        rule.fail = error_kind_from_string(jr.at("error").get<std::string>());
      }
      script.rules.push_back(std::move(rule));
    }
  }
  if (doc.contains("default")) {
    script.default_response = doc.at("default").get<std::string>();
  }
  return script;
}

MockScript load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open mock script: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_mock_script(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace lexchain
