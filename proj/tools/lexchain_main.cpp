#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lexchain/chain.hpp"
#include "lexchain/config.hpp"
#include "lexchain/dataset.hpp"
#include "lexchain/errors.hpp"
#include "lexchain/metrics.hpp"
#include "lexchain/mock_provider.hpp"
#include "lexchain/openai_client.hpp"
#include "lexchain/parser.hpp"
#include "lexchain/paths.hpp"
#include "lexchain/prompt_template.hpp"
#include "lexchain/question_bank.hpp"
#include "lexchain/report.hpp"
#include "lexchain/response_cache.hpp"

namespace fs = std::filesystem;
using namespace lexchain;

namespace {

std::atomic<bool> g_cancel{false};

void handle_signal(int) {
  g_cancel.store(true);
}

struct CommonOptions {
  std::string config_path;
  std::string bank_path;
  std::string templates_dir;
};

AppConfig effective_config(const CommonOptions& common) {
  AppConfig config =
      common.config_path.empty() ? AppConfig{} : load_app_config(common.config_path);
  if (!common.bank_path.empty()) {
    config.bank_path = common.bank_path;
  }
  if (!common.templates_dir.empty()) {
    config.templates_dir = common.templates_dir;
  }
  return config;
}

fs::path bank_path_of(const AppConfig& config) {
  return config.bank_path.empty() ? default_bank_path() : fs::path(config.bank_path);
}

fs::path templates_dir_of(const AppConfig& config) {
  return config.templates_dir.empty() ? default_templates_dir() : fs::path(config.templates_dir);
}

std::string sanitize_for_filename(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << content;
  out.flush();
  if (!out) {
    throw IoError("failed while writing " + path.string());
  }
}

std::optional<std::chrono::seconds> parse_age(const std::string& text) {
  if (text.empty()) {
    return std::nullopt;
  }
  size_t idx = 0;
  long long value = std::stoll(text, &idx);
  long long multiplier = 1;
  if (idx < text.size()) {
    const std::string unit = text.substr(idx);
    if (unit == "s") {
      multiplier = 1;
    } else if (unit == "m") {
      multiplier = 60;
    } else if (unit == "h") {
      multiplier = 3600;
    } else if (unit == "d") {
      multiplier = 86400;
    } else {
      throw ConfigError("unknown age unit '" + unit + "' (use s, m, h or d)");
    }
  }
  return std::chrono::seconds(value * multiplier);
}

ConstraintMode parse_mode_flag(const std::string& flag, ConstraintMode fallback) {
  if (flag.empty()) {
    return fallback;
  }
  auto mode = constraint_mode_from_string(flag);
  if (!mode) {
    throw ConfigError("--constraint-mode must be 'observe' or 'enforce'");
  }
  return *mode;
}

int cmd_questions(const CommonOptions& common) {
  AppConfig config = effective_config(common);
  QuestionBank bank = load_question_bank(bank_path_of(config));
  for (const auto& q : bank) {
    std::cout << q.id << " [" << q.concept_name << "] " << q.question_text << '\n';
    std::cout << render_options(q.options) << '\n';
    if (!q.exclusive_options.empty()) {
      std::cout << "  exclusive:";
      for (char letter : q.exclusive_options) {
        std::cout << ' ' << letter;
      }
      std::cout << " (when selected, must be the sole selection)\n";
    }
    if (q.abstention_option) {
      std::cout << "  abstention option: " << *q.abstention_option << '\n';
    }
    if (q.catch_all_option) {
      std::cout << "  catch-all option: " << *q.catch_all_option << '\n';
    }
    std::cout << '\n';
  }
  return 0;
}

struct RunOptions {
  std::string dataset_path;
  std::string question_id;
  std::string template_id;
  std::string model = "gpt-4o";
  std::string provider = "openai";
  std::string script_path;
  std::string out_path;
  std::string cache_path;
  bool no_cache = false;
  bool replay = false;
  std::string constraint_mode;
  int parallelism = 0;
  double temperature = -1.0;
  int max_output_tokens = 0;
};

int cmd_run(const CommonOptions& common, const RunOptions& opts) {
  AppConfig config = effective_config(common);

  // Everything that can be validated happens before any provider exists.
  QuestionBank bank = load_question_bank(bank_path_of(config));
  const QuestionSpec* question = find_question(bank, opts.question_id);
  if (question == nullptr) {
    throw ValidationError("unknown question '" + opts.question_id + "'");
  }
  TemplateStore store = TemplateStore::load_dir(templates_dir_of(config));
  store.get(opts.template_id, question->id, 1);  // not-found fails here
  Dataset dataset = load_dataset(opts.dataset_path, bank);

  ChainConfig chain_config;
  chain_config.template_id = opts.template_id;
  chain_config.question_id = question->id;
  chain_config.model_id = opts.model;
  chain_config.wire_model_id = config.resolve_model(opts.model);
  chain_config.temperature = opts.temperature >= 0.0 ? opts.temperature : config.temperature;
  if (opts.max_output_tokens > 0) {
    chain_config.max_output_tokens = opts.max_output_tokens;
  }
  chain_config.constraint_mode = parse_mode_flag(opts.constraint_mode, config.constraint_mode);
  chain_config.parallelism = opts.parallelism > 0 ? opts.parallelism : config.parallelism;

  std::shared_ptr<CacheStore> cache;
  const std::string cache_path = opts.cache_path.empty() ? config.cache_path : opts.cache_path;
  if (!opts.no_cache || opts.replay) {
    cache = std::make_shared<CacheStore>(cache_path);
  }

  std::shared_ptr<Provider> provider;
  std::shared_ptr<ScriptedMockProvider> mock;
  std::shared_ptr<CachedProvider> cached;
  if (opts.replay) {
    provider = std::make_shared<ReplayProvider>(cache, opts.provider);
  } else if (opts.provider == "mock") {
    if (opts.script_path.empty()) {
      throw ConfigError("--provider mock needs --script <file>");
    }
    mock = std::make_shared<ScriptedMockProvider>(load_mock_script(opts.script_path));
    provider = mock;
  } else if (opts.provider == "openai") {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + config.api_key_env +
                        " is not set (credentials come from the environment only)");
    }
    OpenAiClientOptions client_options;
    client_options.base_url = config.base_url;
    client_options.completions_path = config.completions_path;
    client_options.api_key = key;
    client_options.max_attempts = config.max_attempts;
    client_options.backoff_base = std::chrono::milliseconds(config.backoff_base_ms);
    client_options.backoff_cap = std::chrono::milliseconds(config.backoff_cap_ms);
    client_options.timeout = std::chrono::milliseconds(config.timeout_ms);
    provider = std::make_shared<OpenAiClient>(std::move(client_options));
  } else {
    throw ConfigError("unknown provider '" + opts.provider + "' (use openai or mock)");
  }
  if (!opts.no_cache && !opts.replay) {
    cached = std::make_shared<CachedProvider>(provider, cache);
    provider = cached;
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  RunArtifact artifact = run_batch(chain_config, dataset, *question, store, *provider, &g_cancel);

  fs::path out = opts.out_path.empty()
                     ? fs::path("trace_" + sanitize_for_filename(opts.template_id) + "_" +
                                sanitize_for_filename(question->id) + "_" +
                                sanitize_for_filename(opts.model) + ".jsonl")
                     : fs::path(opts.out_path);
  write_trace(out, artifact);

  int64_t abstained = 0;
  int64_t unparseable = 0;
  for (const auto& run : artifact.runs) {
    abstained += run.prediction.abstained ? 1 : 0;
    unparseable += run.prediction.unparseable ? 1 : 0;
  }
  size_t upstream = cached ? cached->misses() : (mock ? mock->call_count() : 0);
  size_t cache_hits = cached ? cached->hits() : 0;
  if (opts.replay) {
    upstream = 0;
  }

  std::cout << "trace: " << out.string() << '\n';
  std::cout << "runs: " << artifact.runs.size() << "  failures: " << artifact.failures.size()
            << "  skipped: " << artifact.skips.size() << "  abstained: " << abstained
            << "  unparseable: " << unparseable << '\n';
  std::cout << "upstream calls: " << upstream << "  cached: " << cache_hits << '\n';
  if (artifact.cancelled) {
    std::cout << "cancelled: batch drained before completing all items\n";
    return 1;
  }
  return 0;
}

struct EvalOptions {
  std::string trace_path;
  std::string dataset_path;
  std::string constraint_mode;
  std::string average = "macro";
  std::string out_dir = ".";
  std::string name;
  std::vector<std::string> formats;
};

int cmd_eval(const CommonOptions& common, const EvalOptions& opts) {
  AppConfig config = effective_config(common);
  QuestionBank bank = load_question_bank(bank_path_of(config));
  Dataset dataset = load_dataset(opts.dataset_path, bank);
  TraceFile trace = read_trace(opts.trace_path);

  const ConstraintMode mode = parse_mode_flag(opts.constraint_mode, config.constraint_mode);
  auto average = average_kind_from_string(opts.average);
  if (!average) {
    throw ConfigError("--average must be 'macro' or 'micro'");
  }

  EvalReport report = score_trace(trace, dataset, bank, mode);

  const std::vector<std::string>& formats =
      opts.formats.empty() ? config.report_formats : opts.formats;
  std::string name = opts.name;
  if (name.empty()) {
    name = "eval_" + sanitize_for_filename(report.template_id) + "_" +
           sanitize_for_filename(report.question_id) + "_" +
           sanitize_for_filename(report.model_id);
  }
  const fs::path dir(opts.out_dir);
  for (const auto& format : formats) {
    if (format == "text") {
      write_file(dir / (name + ".txt"), render_eval_text(report, *average));
    } else if (format == "csv") {
      write_file(dir / (name + ".csv"), eval_report_to_csv(report, *average));
    } else if (format == "json") {
      write_file(dir / (name + ".json"), eval_report_to_json(report, *average));
    } else {
      throw ConfigError("unknown report format '" + format + "'");
    }
  }
  std::cout << render_eval_text(report, *average);
  return 0;
}

struct ReportOptions {
  std::vector<std::string> trace_paths;
  std::string dataset_path;
  std::string values_path;
  std::string constraint_mode;
  std::string average = "macro";
  std::string format = "text";
  std::string out_path;
  bool per_option = false;
};

int cmd_report(const CommonOptions& common, const ReportOptions& opts) {
  AppConfig config = effective_config(common);

  ReportCells cells;
  if (!opts.values_path.empty()) {
    if (!opts.trace_paths.empty()) {
      throw ConfigError("pass either trace files or --values, not both");
    }
    cells = load_report_values(opts.values_path);
  } else {
    if (opts.trace_paths.empty()) {
      throw ConfigError("report needs trace files or --values");
    }
    if (opts.dataset_path.empty()) {
      throw ConfigError("scoring traces needs --dataset");
    }
    QuestionBank bank = load_question_bank(bank_path_of(config));
    Dataset dataset = load_dataset(opts.dataset_path, bank);
    const ConstraintMode mode = parse_mode_flag(opts.constraint_mode, config.constraint_mode);
    auto average = average_kind_from_string(opts.average);
    if (!average) {
      throw ConfigError("--average must be 'macro' or 'micro'");
    }
    for (const auto& path : opts.trace_paths) {
      TraceFile trace = read_trace(path);
      EvalReport report = score_trace(trace, dataset, bank, mode);
      cells.summary.push_back(summary_cell_from_report(report, *average));
      if (opts.per_option) {
        auto rows = per_option_cells_from_report(report);
        cells.per_option.insert(cells.per_option.end(), rows.begin(), rows.end());
      }
    }
  }

  std::string output;
  if (opts.format == "text") {
    if (!cells.summary.empty()) {
      output += render_summary_grid(cells.summary);
    }
    if (!cells.per_option.empty()) {
      if (!output.empty()) {
        output += '\n';
      }
      output += render_per_option_grid(cells.per_option);
    }
  } else if (opts.format == "csv") {
    // Rendering validates cell uniqueness even when only the CSV is emitted.
    if (!cells.summary.empty()) {
      render_summary_grid(cells.summary);
      output += summary_cells_to_csv(cells.summary);
    }
    if (!cells.per_option.empty()) {
      render_per_option_grid(cells.per_option);
      std::string csv = per_option_cells_to_csv(cells.per_option);
      if (!output.empty()) {
        // Drop the duplicated header when both kinds are present.
        csv.erase(0, csv.find('\n') + 1);
      }
      output += csv;
    }
  } else {
    throw ConfigError("--format must be 'text' or 'csv'");
  }
  if (output.empty()) {
    throw ValidationError("no cells to report");
  }

  if (opts.out_path.empty()) {
    std::cout << output;
  } else {
    write_file(opts.out_path, output);
    std::cout << "report: " << opts.out_path << '\n';
  }
  return 0;
}

int cmd_cache_stats(const CommonOptions& common, const std::string& cache_flag) {
  AppConfig config = effective_config(common);
  const std::string path = cache_flag.empty() ? config.cache_path : cache_flag;
  CacheStore store((fs::path(path)));
  auto stats = store.stats();
  std::cout << "cache: " << path << '\n';
  std::cout << "entries: " << stats.entries << '\n';
  std::cout << "bytes: " << stats.file_bytes << '\n';
  return 0;
}

int cmd_cache_purge(const CommonOptions& common, const std::string& cache_flag,
                    const std::string& older_than) {
  AppConfig config = effective_config(common);
  const std::string path = cache_flag.empty() ? config.cache_path : cache_flag;
  CacheStore store((fs::path(path)));
  const size_t removed = store.purge(parse_age(older_than));
  std::cout << "purged: " << removed << " entries\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lexchain: prompt chains and scoring for structured contract-clause questions"};
  app.require_subcommand(1);

  CommonOptions common;
  app.add_option("--config", common.config_path, "Config file (JSON)");
  app.add_option("--bank", common.bank_path, "Question bank file");
  app.add_option("--templates", common.templates_dir, "Template asset directory");

  auto* questions = app.add_subcommand("questions", "List the question bank");

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run a prompt chain over a dataset");
  run->add_option("--dataset", run_opts.dataset_path, "Dataset JSONL file")->required();
  run->add_option("--question", run_opts.question_id, "Question id (e.g. Q1)")->required();
  run->add_option("--template", run_opts.template_id, "Template id (P1..P5, variants)")->required();
  run->add_option("--model", run_opts.model, "Model alias; recorded in the trace");
  run->add_option("--provider", run_opts.provider, "openai or mock");
  run->add_option("--script", run_opts.script_path, "Mock script file (JSON)");
  run->add_option("--out", run_opts.out_path, "Trace output path");
  run->add_option("--cache", run_opts.cache_path, "Cache file path");
  run->add_flag("--no-cache", run_opts.no_cache, "Disable the response cache");
  run->add_flag("--replay", run_opts.replay, "Answer from the cache only; no network");
  run->add_option("--constraint-mode", run_opts.constraint_mode, "observe or enforce");
  run->add_option("--parallelism", run_opts.parallelism, "Concurrent items");
  run->add_option("--temperature", run_opts.temperature, "Sampling temperature");
  run->add_option("--max-output-tokens", run_opts.max_output_tokens, "Completion token cap");

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Score a trace against gold annotations");
  eval->add_option("--trace", eval_opts.trace_path, "Trace JSONL file")->required();
  eval->add_option("--dataset", eval_opts.dataset_path, "Dataset JSONL file")->required();
  eval->add_option("--constraint-mode", eval_opts.constraint_mode, "observe or enforce");
  eval->add_option("--average", eval_opts.average, "macro or micro");
  eval->add_option("--out-dir", eval_opts.out_dir, "Directory for report files");
  eval->add_option("--name", eval_opts.name, "Base name for report files");
  eval->add_option("--formats", eval_opts.formats, "Report formats (text csv json)")
      ->delimiter(',');

  ReportOptions report_opts;
  auto* report = app.add_subcommand("report", "Combine traces or values into result grids");
  report->add_option("traces", report_opts.trace_paths, "Trace JSONL files");
  report->add_option("--dataset", report_opts.dataset_path, "Dataset JSONL file");
  report->add_option("--values", report_opts.values_path, "Precomputed cell values (JSON)");
  report->add_option("--constraint-mode", report_opts.constraint_mode, "observe or enforce");
  report->add_option("--average", report_opts.average, "macro or micro");
  report->add_option("--format", report_opts.format, "text or csv");
  report->add_option("--out", report_opts.out_path, "Output path (default stdout)");
  report->add_flag("--per-option", report_opts.per_option, "Include per-option P/R grid");

  auto* cache = app.add_subcommand("cache", "Inspect or prune the response cache");
  cache->require_subcommand(1);
  std::string cache_flag;
  cache->add_option("--cache", cache_flag, "Cache file path");
  auto* stats = cache->add_subcommand("stats", "Entry count and size");
  std::string older_than;
  auto* purge = cache->add_subcommand("purge", "Delete entries");
  purge->add_option("--older-than", older_than, "Only entries at least this old (e.g. 30s, 2h, 7d)");

  try {
    app.parse(argc, argv);
    if (*questions) {
      return cmd_questions(common);
    }
    if (*run) {
      return cmd_run(common, run_opts);
    }
    if (*eval) {
      return cmd_eval(common, eval_opts);
    }
    if (*report) {
      return cmd_report(common, report_opts);
    }
    if (*cache) {
      if (*stats) {
        return cmd_cache_stats(common, cache_flag);
      }
      if (*purge) {
        return cmd_cache_purge(common, cache_flag, older_than);
      }
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
