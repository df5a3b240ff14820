#include "lexchain/provider.hpp"

#include <json.hpp>

#include "lexchain/digest.hpp"

namespace lexchain {

const char* to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::complete: return "complete";
    case FinishReason::truncated: return "truncated";
    case FinishReason::refused: return "refused";
    case FinishReason::error: return "error";
  }
  return "error";
}

std::optional<FinishReason> finish_reason_from_string(const std::string& s) {
  if (s == "complete") return FinishReason::complete;
  if (s == "truncated") return FinishReason::truncated;
  if (s == "refused") return FinishReason::refused;
  if (s == "error") return FinishReason::error;
  return std::nullopt;
}

std::string cache_key(const std::string& provider_id, const CompletionRequest& request) {
  auto field = [](const std::string& value) {
    return std::to_string(value.size()) + ":" + value + ",";
  };
  std::string canonical;
  canonical += field(provider_id);
  canonical += field(request.model_id);
  // Shortest round-trip decimal, the same representation the cache file uses.
  canonical += field(nlohmann::json(request.temperature).dump());
  canonical += field(request.max_output_tokens ? std::to_string(*request.max_output_tokens)
                                               : std::string("none"));
  canonical += field(std::to_string(request.template_version));
  canonical += field(request.prompt_text);
  return sha256_hex(canonical);
}

}  // namespace lexchain
