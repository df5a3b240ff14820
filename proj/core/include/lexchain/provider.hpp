#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lexchain {

enum class FinishReason {
  complete,
  truncated,
  refused,
  error,
};

const char* to_string(FinishReason reason);
std::optional<FinishReason> finish_reason_from_string(const std::string& s);

struct CompletionRequest {
  std::string model_id;
  std::string prompt_text;
  double temperature = 0.0;
  std::optional<int> max_output_tokens;  // unset: provider default
  int template_version = 1;              // editing an asset invalidates cached completions
};

struct TokenUsage {
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
  int64_t total_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct CompletionResult {
  std::string raw_text;
  FinishReason finish_reason = FinishReason::complete;
  int64_t latency_ms = 0;
  bool from_cache = false;
  std::optional<TokenUsage> usage;
};

// A chat-completion backend. Every complete() call is stateless: the wire
// payload is a pure function of the request, with no conversational context.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual CompletionResult complete(const CompletionRequest& request) = 0;

  // Stable identifier that participates in cache keys ("openai", "mock").
  virtual std::string id() const = 0;
};

// Content digest over (provider id, model_id, temperature, max_output_tokens,
// template_version, prompt_text), in that order, each field length-prefixed
// as "<decimal byte count>:<bytes>," so that no field boundary is ambiguous.
std::string cache_key(const std::string& provider_id, const CompletionRequest& request);

}  // namespace lexchain
