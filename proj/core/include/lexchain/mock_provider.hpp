#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lexchain/errors.hpp"
#include "lexchain/provider.hpp"

namespace lexchain {

// One scripted response. Rules are evaluated in order; the first match wins.
// A rule matches when every `contains` needle occurs in the prompt (or the
// prompt equals `equals`); `fail` makes the rule raise the named provider
// error instead of answering.
struct ScriptRule {
  std::vector<std::string> contains;  // all must match
  std::optional<std::string> equals;
  std::string response;
  FinishReason finish_reason = FinishReason::complete;
  std::optional<ProviderErrorKind> fail;
};

struct MockScript {
  std::vector<ScriptRule> rules;
  std::optional<std::string> default_response;
};

// Deterministic scripted provider used as the test oracle and for offline CLI
// runs. Records every request in call order; thread-safe.
class ScriptedMockProvider : public Provider {
 public:
  explicit ScriptedMockProvider(MockScript script) : script_(std::move(script)) {}

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "mock"; }

  std::vector<CompletionRequest> recorded_requests() const;
  size_t call_count() const;

 private:
  MockScript script_;
  mutable std::mutex mutex_;
  std::vector<CompletionRequest> recorded_;
};

// Script file format: {"rules": [{"contains": ..., "response": ...,
// "finish_reason"?: ..., "error"?: ...}], "default"?: "..."}.
MockScript load_mock_script(const std::filesystem::path& path);
MockScript parse_mock_script(const std::string& json_text);

}  // namespace lexchain
