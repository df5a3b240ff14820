#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lexchain/dataset.hpp"
#include "lexchain/parser.hpp"
#include "lexchain/prompt_template.hpp"
#include "lexchain/provider.hpp"
#include "lexchain/question_bank.hpp"

namespace lexchain {

struct ChainConfig {
  std::string template_id;
  std::string question_id;
  std::string model_id;       // label recorded in traces and reports
  std::string wire_model_id;  // what the provider sees; defaults to model_id
  double temperature = 0.0;
  std::optional<int> max_output_tokens;
  ConstraintMode constraint_mode = ConstraintMode::observe;
  int parallelism = 1;

  const std::string& effective_wire_model() const {
    return wire_model_id.empty() ? model_id : wire_model_id;
  }
};

// Full record of one clause through a chain. For single-stage templates the
// stage-1 fields are absent and final_prompt is the sole prompt.
struct ChainRun {
  std::string clause_id;
  std::string question_id;
  std::string template_id;
  std::string model_id;
  ConstraintMode constraint_mode = ConstraintMode::observe;
  double temperature = 0.0;
  std::optional<std::string> stage1_prompt;
  std::optional<std::string> stage1_raw;
  std::string final_prompt;
  std::string final_raw;
  std::vector<int> stage_template_versions;
  std::vector<FinishReason> stage_finish;
  std::vector<int64_t> stage_latency_ms;
  int provider_calls = 0;  // logical completions issued: 1 single-stage, 2 two-stage
  PredictionSet prediction;
};

struct RunFailure {
  std::string clause_id;
  std::string error;
};

struct RunSkip {
  std::string clause_id;
  std::string reason;
};

struct RunArtifact {
  ChainConfig config;
  std::vector<ChainRun> runs;
  std::vector<RunFailure> failures;
  std::vector<RunSkip> skips;
  std::chrono::system_clock::time_point created_at;
  bool cancelled = false;
};

// Single-stage chains (P1, P2 and variants): one render, one completion, one
// parse. Parse problems are recorded on the run, never thrown; provider
// errors propagate.
ChainRun run_single_stage(const ChainConfig& config, const ClauseItem& item,
                          const QuestionSpec& question, const TemplateStore& store,
                          Provider& provider);

// Two-stage chains (P3, P4, P5): the stage-1 response, with trailing
// whitespace stripped but otherwise unmodified, becomes the RESPONSE binding
// of stage 2. Both calls are stateless; stage 2 never sees the clause text.
ChainRun run_two_stage(const ChainConfig& config, const ClauseItem& item,
                       const QuestionSpec& question, const TemplateStore& store,
                       Provider& provider);

// Dispatches on whether a stage-2 asset exists for the template.
ChainRun run_clause(const ChainConfig& config, const ClauseItem& item,
                    const QuestionSpec& question, const TemplateStore& store, Provider& provider);

// Runs every dataset item whose concept matches the question, in parallel up
// to config.parallelism, with deterministic clause_id output order. Items of
// other concepts are recorded as skips; per-item errors become failures and
// the batch completes. A set cancel flag drains in-flight items and stops.
RunArtifact run_batch(const ChainConfig& config, const Dataset& dataset,
                      const QuestionSpec& question, const TemplateStore& store,
                      Provider& provider, const std::atomic<bool>* cancel = nullptr);

// Trace file: JSON lines, one record per line, records tagged "run",
// "failure" or "skip". Content is a pure function of (config, dataset,
// provider responses); no timestamps.
void write_trace(const std::filesystem::path& path, const RunArtifact& artifact);

struct TraceFile {
  std::vector<ChainRun> runs;
  std::vector<RunFailure> failures;
  std::vector<RunSkip> skips;
};
TraceFile read_trace(const std::filesystem::path& path);

}  // namespace lexchain
