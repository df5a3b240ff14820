#include "lexchain/chain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "json_codec.hpp"
#include "lexchain/errors.hpp"

using nlohmann::json;

namespace lexchain {
namespace {

SlotBindings bindings_for(const ClauseItem& item, const QuestionSpec& question) {
  SlotBindings b;
  b.clause_name = question.concept_display_name();
  b.clause = item.clause_text;
  b.question = question.question_text;
  b.options_text = render_options(question.options);
  return b;
}

CompletionRequest make_request(const ChainConfig& config, const std::string& prompt,
                               int template_version) {
  CompletionRequest req;
  req.model_id = config.effective_wire_model();
  req.prompt_text = prompt;
  req.temperature = config.temperature;
  req.max_output_tokens = config.max_output_tokens;
  req.template_version = template_version;
  return req;
}

ChainRun make_run_shell(const ChainConfig& config, const ClauseItem& item,
                        const QuestionSpec& question) {
  ChainRun run;
  run.clause_id = item.id;
  run.question_id = question.id;
  run.template_id = config.template_id;
  run.model_id = config.model_id;
  run.constraint_mode = config.constraint_mode;
  run.temperature = config.temperature;
  return run;
}

std::string rstrip(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.pop_back();
  }
  return s;
}

}  // namespace

ChainRun run_single_stage(const ChainConfig& config, const ClauseItem& item,
                          const QuestionSpec& question, const TemplateStore& store,
                          Provider& provider) {
  if (store.is_two_stage(config.template_id, question.id)) {
    throw ValidationError("template " + config.template_id +
                          " is a two-stage chain; use run_two_stage");
  }
  const PromptTemplate& tmpl = store.get(config.template_id, question.id, 1);

  ChainRun run = make_run_shell(config, item, question);
  run.final_prompt = render(tmpl, bindings_for(item, question));

  CompletionResult result = provider.complete(make_request(config, run.final_prompt, tmpl.version));
  run.final_raw = result.raw_text;
  run.stage_template_versions = {tmpl.version};
  run.stage_finish = {result.finish_reason};
  run.stage_latency_ms = {result.latency_ms};
  run.provider_calls = 1;
  run.prediction = parse_response(run.final_raw, question, config.constraint_mode);
  return run;
}

ChainRun run_two_stage(const ChainConfig& config, const ClauseItem& item,
                       const QuestionSpec& question, const TemplateStore& store,
                       Provider& provider) {
  const PromptTemplate& stage1 = store.get(config.template_id, question.id, 1);
  const PromptTemplate& stage2 = store.get(config.template_id, question.id, 2);

  ChainRun run = make_run_shell(config, item, question);
  SlotBindings bindings = bindings_for(item, question);

  run.stage1_prompt = render(stage1, bindings);
  CompletionResult first =
      provider.complete(make_request(config, *run.stage1_prompt, stage1.version));
  run.stage1_raw = rstrip(first.raw_text);

  bindings.response = *run.stage1_raw;
  run.final_prompt = render(stage2, bindings);
  CompletionResult second =
      provider.complete(make_request(config, run.final_prompt, stage2.version));
  run.final_raw = second.raw_text;

  run.stage_template_versions = {stage1.version, stage2.version};
  run.stage_finish = {first.finish_reason, second.finish_reason};
  run.stage_latency_ms = {first.latency_ms, second.latency_ms};
  run.provider_calls = 2;
  run.prediction = parse_response(run.final_raw, question, config.constraint_mode);
  return run;
}

ChainRun run_clause(const ChainConfig& config, const ClauseItem& item,
                    const QuestionSpec& question, const TemplateStore& store,
                    Provider& provider) {
  if (store.is_two_stage(config.template_id, question.id)) {
    return run_two_stage(config, item, question, store, provider);
  }
  return run_single_stage(config, item, question, store, provider);
}

RunArtifact run_batch(const ChainConfig& config, const Dataset& dataset,
                      const QuestionSpec& question, const TemplateStore& store,
                      Provider& provider, const std::atomic<bool>* cancel) {
  if (config.parallelism < 1) {
    throw ConfigError("parallelism must be >= 1");
  }
  // Resolve templates up front so misconfiguration fails before any call.
  store.get(config.template_id, question.id, 1);

  RunArtifact artifact;
  artifact.config = config;
  artifact.created_at = std::chrono::system_clock::now();

  std::vector<const ClauseItem*> matching;
  for (const auto& item : dataset.items) {
    if (item.concept_name == question.concept_name) {
      matching.push_back(&item);
    } else {
      artifact.skips.push_back({item.id, "clause concept '" + item.concept_name +
                                             "' does not match question concept '" +
                                             question.concept_name + "'"});
    }
  }
  std::sort(matching.begin(), matching.end(),
            [](const ClauseItem* a, const ClauseItem* b) { return a->id < b->id; });
  std::sort(artifact.skips.begin(), artifact.skips.end(),
            [](const RunSkip& a, const RunSkip& b) { return a.clause_id < b.clause_id; });

  struct Slot {
    std::optional<ChainRun> run;
    std::optional<RunFailure> failure;
    bool done = false;
  };
  std::vector<Slot> slots(matching.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    while (true) {
      if (cancel != nullptr && cancel->load()) {
        return;
      }
      const size_t i = next.fetch_add(1);
      if (i >= matching.size()) {
        return;
      }
      Slot& slot = slots[i];
      try {
        slot.run = run_clause(config, *matching[i], question, store, provider);
      } catch (const std::exception& e) {
        slot.failure = RunFailure{matching[i]->id, e.what()};
      }
      slot.done = true;
    }
  };

  const size_t thread_count =
      std::min<size_t>(static_cast<size_t>(config.parallelism), std::max<size_t>(matching.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (size_t i = 0; i < thread_count; ++i) {
    threads.emplace_back(worker);
  }
  for (auto& t : threads) {
    t.join();
  }

  for (auto& slot : slots) {
    if (slot.run) {
      artifact.runs.push_back(std::move(*slot.run));
    } else if (slot.failure) {
      artifact.failures.push_back(std::move(*slot.failure));
    } else {
      artifact.cancelled = true;  // item never started before the drain
    }
  }
  return artifact;
}

void write_trace(const std::filesystem::path& path, const RunArtifact& artifact) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write trace file: " + path.string());
  }
  // Interleave runs and failures back into clause_id order so the file reads
  // as one record per processed item.
  size_t ri = 0;
  size_t fi = 0;
  while (ri < artifact.runs.size() || fi < artifact.failures.size()) {
    const bool take_run =
        fi >= artifact.failures.size() ||
        (ri < artifact.runs.size() &&
         artifact.runs[ri].clause_id < artifact.failures[fi].clause_id);
    if (take_run) {
      out << chain_run_to_json_obj(artifact.runs[ri++]).dump() << '\n';
    } else {
      const auto& f = artifact.failures[fi++];
      out << json{{"record", "failure"}, {"clause_id", f.clause_id}, {"error", f.error}}.dump()
          << '\n';
    }
  }
  for (const auto& s : artifact.skips) {
    out << json{{"record", "skip"}, {"clause_id", s.clause_id}, {"reason", s.reason}}.dump()
        << '\n';
  }
  out.flush();
  if (!out) {
    throw IoError("failed while writing trace file: " + path.string());
  }
}

TraceFile read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open trace file: " + path.string());
  }
  TraceFile trace;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ValidationError(path.string() + ": malformed trace line " + std::to_string(line_no));
    }
    const std::string record = j.value("record", "");
    if (record == "run") {
      trace.runs.push_back(chain_run_from_json_obj(j));
    } else if (record == "failure") {
      trace.failures.push_back({j.value("clause_id", ""), j.value("error", "")});
    } else if (record == "skip") {
      trace.skips.push_back({j.value("clause_id", ""), j.value("reason", "")});
    } else {
      throw ValidationError(path.string() + ": unknown record type '" + record + "' at line " +
                            std::to_string(line_no));
    }
  }
  return trace;
}

}  // namespace lexchain
