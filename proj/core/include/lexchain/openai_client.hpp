#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "lexchain/provider.hpp"

namespace lexchain {

struct OpenAiClientOptions {
  std::string base_url;  // e.g. "https://api.openai.com" or "http://127.0.0.1:8089"
  std::string completions_path = "/v1/chat/completions";
  std::string api_key;  // read from the environment by the caller, never from files
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::milliseconds backoff_cap{30000};
  std::chrono::milliseconds timeout{120000};
  // Injectable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep_fn;
};

// Wire client for OpenAI-compatible chat-completion endpoints. Each call
// posts a single user-role message carrying the full rendered prompt; no
// system message and no conversation history are ever sent.
//
// Retry policy: network failures, HTTP 429 and 5xx are retried up to
// max_attempts with exponential backoff (base * 2^n, capped); authentication
// failures and malformed response bodies are never retried.
class OpenAiClient : public Provider {
 public:
  explicit OpenAiClient(OpenAiClientOptions options);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "openai"; }

  // The JSON body complete() would send, exposed for payload-shape tests.
  static std::string request_body(const CompletionRequest& request);

 private:
  OpenAiClientOptions options_;
};

}  // namespace lexchain
