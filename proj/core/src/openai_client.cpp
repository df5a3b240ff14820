#include "lexchain/openai_client.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "lexchain/errors.hpp"

using nlohmann::json;

namespace lexchain {
namespace {

FinishReason map_finish_reason(const std::string& wire) {
  if (wire == "stop" || wire.empty()) {
    return FinishReason::complete;
  }
  if (wire == "length") {
    return FinishReason::truncated;
  }
  if (wire == "content_filter") {
    return FinishReason::refused;
  }
  return FinishReason::error;
}

CompletionResult parse_response_body(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ProviderError(ProviderErrorKind::malformed_response,
                        "endpoint returned a non-JSON body");
  }
  if (!doc.contains("choices") || !doc.at("choices").is_array() || doc.at("choices").empty()) {
    throw ProviderError(ProviderErrorKind::malformed_response,
                        "endpoint response has no choices");
  }
  const json& choice = doc.at("choices").front();
  if (!choice.contains("message") || !choice.at("message").contains("content")) {
    throw ProviderError(ProviderErrorKind::malformed_response,
                        "endpoint response choice has no message content");
  }
  CompletionResult result;
  const auto& content = choice.at("message").at("content");
  result.raw_text = content.is_null() ? std::string() : content.get<std::string>();
  result.finish_reason = map_finish_reason(choice.value("finish_reason", ""));
  if (result.raw_text.empty() && result.finish_reason == FinishReason::complete) {
    result.finish_reason = FinishReason::error;
  }
  if (doc.contains("usage") && doc.at("usage").is_object()) {
    TokenUsage usage;
    usage.prompt_tokens = doc.at("usage").value("prompt_tokens", int64_t{0});
    usage.completion_tokens = doc.at("usage").value("completion_tokens", int64_t{0});
    usage.total_tokens = doc.at("usage").value("total_tokens", int64_t{0});
    result.usage = usage;
  }
  return result;
}

}  // namespace

OpenAiClient::OpenAiClient(OpenAiClientOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) {
    throw ConfigError("openai client needs a base URL");
  }
  if (options_.api_key.empty()) {
    throw ConfigError("openai client needs an API key (set the configured environment variable)");
  }
  if (!options_.sleep_fn) {
    options_.sleep_fn = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::string OpenAiClient::request_body(const CompletionRequest& request) {
  json body;
  body["model"] = request.model_id;
  body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt_text}}});
  body["temperature"] = request.temperature;
  if (request.max_output_tokens) {
    body["max_tokens"] = *request.max_output_tokens;
  }
  return body.dump();
}

CompletionResult OpenAiClient::complete(const CompletionRequest& request) {
  const std::string body = request_body(request);
  httplib::Headers headers = {{"Authorization", "Bearer " + options_.api_key}};

  std::string last_error = "request not attempted";
  ProviderErrorKind last_kind = ProviderErrorKind::network;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      auto delay = options_.backoff_base * (1LL << (attempt - 2));
      options_.sleep_fn(std::min<std::chrono::milliseconds>(delay, options_.backoff_cap));
    }

    httplib::Client client(options_.base_url);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout));

    const auto started = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(options_.completions_path, headers, body, "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (!res) {
      last_error = "network error: " + httplib::to_string(res.error());
      last_kind = ProviderErrorKind::network;
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw ProviderError(ProviderErrorKind::authentication,
                          "authentication failed (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
      last_error = "rate limited (HTTP 429)";
      last_kind = ProviderErrorKind::rate_limited;
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error (HTTP " + std::to_string(res->status) + ")";
      last_kind = ProviderErrorKind::network;
      continue;
    }
    if (res->status != 200) {
      throw ProviderError(ProviderErrorKind::other,
                          "unexpected HTTP status " + std::to_string(res->status) + ": " +
                              res->body.substr(0, 200));
    }
    CompletionResult result = parse_response_body(res->body);
    result.latency_ms = elapsed.count();
    return result;
  }
  throw ProviderError(last_kind, "giving up after " + std::to_string(options_.max_attempts) +
                                     " attempts; " + last_error);
}

}  // namespace lexchain
