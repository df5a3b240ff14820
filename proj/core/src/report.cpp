#include "lexchain/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lexchain/errors.hpp"

using nlohmann::json;

namespace lexchain {
namespace {

void append_unique(std::vector<std::string>& order, const std::string& value) {
  if (std::find(order.begin(), order.end(), value) == order.end()) {
    order.push_back(value);
  }
}

std::string pad(const std::string& s, size_t width) {
  std::string out = s;
  if (out.size() < width) {
    out.append(width - out.size(), ' ');
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') {
      quoted += "\"\"";
    } else {
      quoted.push_back(c);
    }
  }
  quoted.push_back('"');
  return quoted;
}

json optional_metric_json(const std::optional<Ratio>& r) {
  return r ? json(r->value()) : json(nullptr);
}

std::optional<double> metric_value(const std::optional<Ratio>& r) {
  if (!r) {
    return std::nullopt;
  }
  return r->value();
}

}  // namespace

const char* to_string(AverageKind kind) {
  return kind == AverageKind::macro ? "macro" : "micro";
}

std::optional<AverageKind> average_kind_from_string(const std::string& s) {
  if (s == "macro") {
    return AverageKind::macro;
  }
  if (s == "micro") {
    return AverageKind::micro;
  }
  return std::nullopt;
}

std::string format_metric(std::optional<double> value, const char* placeholder) {
  if (!value) {
    return placeholder;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *value);
  return buf;
}

EvalReport score_trace(const TraceFile& trace, const Dataset& dataset, const QuestionBank& bank,
                       ConstraintMode mode) {
  if (trace.runs.empty() && trace.failures.empty()) {
    throw ValidationError("trace contains no runs to score");
  }
  if (trace.runs.empty()) {
    throw ValidationError("trace contains only failure records; nothing was completed");
  }
  const ChainRun& first = trace.runs.front();
  for (const auto& run : trace.runs) {
    if (run.question_id != first.question_id || run.template_id != first.template_id ||
        run.model_id != first.model_id) {
      throw ValidationError("trace mixes identities: (" + run.template_id + ", " + run.model_id +
                            ", " + run.question_id + ") vs (" + first.template_id + ", " +
                            first.model_id + ", " + first.question_id + ")");
    }
  }
  const QuestionSpec* question = find_question(bank, first.question_id);
  if (question == nullptr) {
    throw ValidationError("trace references unknown question '" + first.question_id + "'");
  }

  auto gold_for = [&](const std::string& clause_id) {
    const GoldAnnotation* gold = dataset.find_annotation(clause_id, question->id);
    if (gold == nullptr) {
      throw ValidationError("trace references clause '" + clause_id +
                            "' which has no gold annotation for " + question->id +
                            " in the dataset");
    }
    return gold->gold;
  };

  std::vector<ScoredItem> items;
  EvalCounts counts;
  for (const auto& run : trace.runs) {
    ScoredItem item;
    item.clause_id = run.clause_id;
    item.gold = gold_for(run.clause_id);
    PredictionSet prediction = parse_response(run.final_raw, *question, mode);
    item.selected = prediction.selected;
    item.abstained = prediction.abstained;
    item.unparseable = prediction.unparseable;
    counts.abstained += prediction.abstained ? 1 : 0;
    counts.unparseable += prediction.unparseable ? 1 : 0;
    items.push_back(std::move(item));
  }
  for (const auto& failure : trace.failures) {
    ScoredItem item;
    item.clause_id = failure.clause_id;
    item.gold = gold_for(failure.clause_id);
    items.push_back(std::move(item));
  }
  counts.scored = static_cast<int64_t>(items.size());
  counts.failures = static_cast<int64_t>(trace.failures.size());
  counts.skipped = static_cast<int64_t>(trace.skips.size());

  EvalReport report = build_report(items, *question, counts);
  report.template_id = first.template_id;
  report.model_id = first.model_id;
  report.constraint_mode = mode;
  return report;
}

std::string render_summary_grid(const std::vector<SummaryCell>& cells) {
  if (cells.empty()) {
    throw ValidationError("no cells to render");
  }
  std::vector<std::string> prompts;
  std::vector<std::string> models;
  std::vector<std::string> questions;
  std::map<std::tuple<std::string, std::string, std::string>, const SummaryCell*> by_key;
  for (const auto& cell : cells) {
    append_unique(prompts, cell.prompt);
    append_unique(models, cell.model);
    append_unique(questions, cell.question);
    auto key = std::make_tuple(cell.prompt, cell.model, cell.question);
    if (!by_key.emplace(key, &cell).second) {
      throw ValidationError("duplicate report cell (" + cell.prompt + ", " + cell.model + ", " +
                            cell.question + ")");
    }
  }

  const size_t prompt_w = 8;
  const size_t metric_w = 13;
  size_t cell_w = 4;
  for (const auto& q : questions) {
    cell_w = std::max(cell_w, q.size());
  }
  cell_w += 3;

  std::ostringstream out;
  // Header: model band, then question letters under each model.
  out << pad("Prompt", prompt_w) << pad("Metric", metric_w);
  for (const auto& model : models) {
    out << pad(model, cell_w * questions.size());
  }
  out << '\n';
  out << pad("", prompt_w) << pad("", metric_w);
  for (size_t m = 0; m < models.size(); ++m) {
    for (const auto& q : questions) {
      out << pad(q, cell_w);
    }
  }
  out << '\n';

  static const char* kMetricNames[] = {"Exact Match", "Precision", "Recall"};
  for (const auto& prompt : prompts) {
    for (int metric = 0; metric < 3; ++metric) {
      out << pad(metric == 0 ? prompt : "", prompt_w) << pad(kMetricNames[metric], metric_w);
      for (const auto& model : models) {
        for (const auto& q : questions) {
          auto it = by_key.find(std::make_tuple(prompt, model, q));
          std::optional<double> value;
          if (it != by_key.end()) {
            const SummaryCell& cell = *it->second;
            value = metric == 0 ? cell.exact_match : metric == 1 ? cell.precision : cell.recall;
          }
          out << pad(format_metric(value), cell_w);
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string summary_cells_to_csv(const std::vector<SummaryCell>& cells) {
  std::ostringstream out;
  out << "prompt,model,question,metric,option,value\n";
  for (const auto& cell : cells) {
    auto row = [&](const char* metric, std::optional<double> value) {
      if (!value) {
        return;
      }
      out << csv_field(cell.prompt) << ',' << csv_field(cell.model) << ','
          << csv_field(cell.question) << ',' << metric << ",," << format_metric(value) << '\n';
    };
    row("exact_match", cell.exact_match);
    row("precision", cell.precision);
    row("recall", cell.recall);
  }
  return out.str();
}

std::string render_per_option_grid(const std::vector<PerOptionCell>& cells) {
  if (cells.empty()) {
    throw ValidationError("no cells to render");
  }
  std::vector<std::string> questions;
  for (const auto& cell : cells) {
    append_unique(questions, cell.question);
  }

  std::ostringstream out;
  bool first_block = true;
  for (const auto& question : questions) {
    std::vector<std::string> prompts;
    std::vector<std::string> models;
    std::vector<char> options;
    std::map<std::tuple<std::string, std::string, char>, const PerOptionCell*> by_key;
    for (const auto& cell : cells) {
      if (cell.question != question) {
        continue;
      }
      append_unique(prompts, cell.prompt);
      append_unique(models, cell.model);
      if (std::find(options.begin(), options.end(), cell.option) == options.end()) {
        options.push_back(cell.option);
      }
      auto key = std::make_tuple(cell.prompt, cell.model, cell.option);
      if (!by_key.emplace(key, &cell).second) {
        throw ValidationError("duplicate report cell (" + cell.prompt + ", " + cell.model + ", " +
                              question + ", option " + std::string(1, cell.option) + ")");
      }
    }
    std::sort(options.begin(), options.end());

    if (!first_block) {
      out << '\n';
    }
    first_block = false;
    out << "Question " << question << '\n';

    const size_t model_w = 14;
    const size_t option_w = 8;
    const size_t pr_w = 7;
    out << pad("Model", model_w) << pad("Option", option_w);
    for (const auto& prompt : prompts) {
      out << pad(prompt, pr_w * 2);
    }
    out << '\n';
    out << pad("", model_w) << pad("", option_w);
    for (size_t p = 0; p < prompts.size(); ++p) {
      out << pad("P", pr_w) << pad("R", pr_w);
    }
    out << '\n';
    for (const auto& model : models) {
      bool first_row = true;
      for (char option : options) {
        out << pad(first_row ? model : "", model_w) << pad(std::string(1, option), option_w);
        first_row = false;
        for (const auto& prompt : prompts) {
          auto it = by_key.find(std::make_tuple(prompt, model, option));
          std::optional<double> p;
          std::optional<double> r;
          if (it != by_key.end()) {
            p = it->second->precision;
            r = it->second->recall;
          }
          out << pad(format_metric(p), pr_w) << pad(format_metric(r), pr_w);
        }
        out << '\n';
      }
    }
  }
  return out.str();
}

std::string per_option_cells_to_csv(const std::vector<PerOptionCell>& cells) {
  std::ostringstream out;
  out << "prompt,model,question,metric,option,value\n";
  for (const auto& cell : cells) {
    auto row = [&](const char* metric, std::optional<double> value) {
      if (!value) {
        return;
      }
      out << csv_field(cell.prompt) << ',' << csv_field(cell.model) << ','
          << csv_field(cell.question) << ',' << metric << ',' << cell.option << ','
          << format_metric(value) << '\n';
    };
    row("precision", cell.precision);
    row("recall", cell.recall);
  }
  return out.str();
}

ReportCells parse_report_values(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw ValidationError("report values must be a JSON array of cell objects");
  }
  ReportCells cells;
  for (const auto& j : doc) {
    if (!j.is_object()) {
      throw ValidationError("report value entries must be objects");
    }
    auto opt_double = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
      }
      return j.at(key).get<double>();
    };
    if (j.contains("option")) {
      PerOptionCell cell;
      cell.prompt = j.value("prompt", "");
      cell.model = j.value("model", "");
      cell.question = j.value("question", "");
      auto letter = normalize_letter(j.at("option").get<std::string>());
      if (!letter) {
        throw ValidationError("report value has invalid option letter");
      }
      cell.option = *letter;
      cell.precision = opt_double("precision");
      cell.recall = opt_double("recall");
      cells.per_option.push_back(std::move(cell));
    } else {
      SummaryCell cell;
      cell.prompt = j.value("prompt", "");
      cell.model = j.value("model", "");
      cell.question = j.value("question", "");
      cell.exact_match = opt_double("exact_match");
      cell.precision = opt_double("precision");
      cell.recall = opt_double("recall");
      cells.summary.push_back(std::move(cell));
    }
  }
  return cells;
}

ReportCells load_report_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open report values file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_report_values(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

SummaryCell summary_cell_from_report(const EvalReport& report, AverageKind average) {
  SummaryCell cell;
  cell.prompt = report.template_id;
  cell.model = report.model_id;
  cell.question = report.question_id;
  cell.exact_match = report.exact_match.value();
  if (average == AverageKind::macro) {
    cell.precision = metric_value(report.macro_precision);
    cell.recall = metric_value(report.macro_recall);
  } else {
    cell.precision = metric_value(report.micro_precision);
    cell.recall = metric_value(report.micro_recall);
  }
  return cell;
}

std::vector<PerOptionCell> per_option_cells_from_report(const EvalReport& report) {
  std::vector<PerOptionCell> cells;
  for (const auto& row : report.per_option) {
    PerOptionCell cell;
    cell.prompt = report.template_id;
    cell.model = report.model_id;
    cell.question = report.question_id;
    cell.option = row.confusion.option;
    cell.precision = metric_value(row.precision);
    cell.recall = metric_value(row.recall);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::string render_eval_text(const EvalReport& report, AverageKind average) {
  std::ostringstream out;
  out << "question: " << report.question_id << "  template: " << report.template_id
      << "  model: " << report.model_id << "  constraint-mode: " << to_string(report.constraint_mode)
      << "  average: " << to_string(average) << '\n';
  out << "scored: " << report.counts.scored << "  abstained: " << report.counts.abstained
      << "  unparseable: " << report.counts.unparseable << "  failures: " << report.counts.failures
      << "  skipped: " << report.counts.skipped << '\n';
  out << "exact match: " << format_metric(report.exact_match.value()) << " ("
      << report.exact_matches << "/" << report.counts.scored << ")\n";

  const auto precision =
      average == AverageKind::macro ? report.macro_precision : report.micro_precision;
  const auto recall = average == AverageKind::macro ? report.macro_recall : report.micro_recall;
  out << "precision: " << format_metric(metric_value(precision), "undefined");
  if (average == AverageKind::macro && report.excluded_precision_options > 0) {
    out << " (" << report.excluded_precision_options << " undefined option(s) excluded)";
  }
  out << '\n';
  out << "recall: " << format_metric(metric_value(recall), "undefined");
  if (average == AverageKind::macro && report.excluded_recall_options > 0) {
    out << " (" << report.excluded_recall_options << " undefined option(s) excluded)";
  }
  out << "\n\n";

  out << pad("option", 8) << pad("tp", 5) << pad("fp", 5) << pad("fn", 5) << pad("tn", 5)
      << pad("support", 9) << pad("precision", 11) << "recall\n";
  for (const auto& row : report.per_option) {
    out << pad(std::string(1, row.confusion.option), 8) << pad(std::to_string(row.confusion.tp), 5)
        << pad(std::to_string(row.confusion.fp), 5) << pad(std::to_string(row.confusion.fn), 5)
        << pad(std::to_string(row.confusion.tn), 5) << pad(std::to_string(row.support), 9)
        << pad(format_metric(metric_value(row.precision), "-"), 11)
        << format_metric(metric_value(row.recall), "-") << '\n';
  }
  return out.str();
}

std::string eval_report_to_csv(const EvalReport& report, AverageKind average) {
  std::ostringstream out;
  out << "prompt,model,question,metric,option,value\n";
  auto row = [&](const std::string& metric, const std::string& option, const std::string& value) {
    out << csv_field(report.template_id) << ',' << csv_field(report.model_id) << ','
        << csv_field(report.question_id) << ',' << metric << ',' << option << ',' << value << '\n';
  };
  row("exact_match", "", format_metric(report.exact_match.value()));
  const auto precision =
      average == AverageKind::macro ? report.macro_precision : report.micro_precision;
  const auto recall = average == AverageKind::macro ? report.macro_recall : report.micro_recall;
  row("precision", "", format_metric(metric_value(precision)));
  row("recall", "", format_metric(metric_value(recall)));
  for (const auto& r : report.per_option) {
    const std::string option(1, r.confusion.option);
    row("precision", option, format_metric(metric_value(r.precision)));
    row("recall", option, format_metric(metric_value(r.recall)));
    row("support", option, std::to_string(r.support));
  }
  row("scored", "", std::to_string(report.counts.scored));
  row("abstained", "", std::to_string(report.counts.abstained));
  row("unparseable", "", std::to_string(report.counts.unparseable));
  row("failures", "", std::to_string(report.counts.failures));
  row("skipped", "", std::to_string(report.counts.skipped));
  return out.str();
}

std::string eval_report_to_json(const EvalReport& report, AverageKind average) {
  json j;
  j["question_id"] = report.question_id;
  j["template_id"] = report.template_id;
  j["model_id"] = report.model_id;
  j["constraint_mode"] = to_string(report.constraint_mode);
  j["average"] = to_string(average);
  j["exact_match"] = {{"value", report.exact_match.value()},
                      {"matches", report.exact_matches},
                      {"scored", report.counts.scored}};
  j["macro"] = {{"precision", optional_metric_json(report.macro_precision)},
                {"recall", optional_metric_json(report.macro_recall)},
                {"excluded_precision_options", report.excluded_precision_options},
                {"excluded_recall_options", report.excluded_recall_options}};
  j["micro"] = {{"precision", optional_metric_json(report.micro_precision)},
                {"recall", optional_metric_json(report.micro_recall)}};
  j["counts"] = {{"scored", report.counts.scored},
                 {"abstained", report.counts.abstained},
                 {"unparseable", report.counts.unparseable},
                 {"failures", report.counts.failures},
                 {"skipped", report.counts.skipped}};
  json rows = json::array();
  for (const auto& row : report.per_option) {
    rows.push_back({{"option", std::string(1, row.confusion.option)},
                    {"tp", row.confusion.tp},
                    {"fp", row.confusion.fp},
                    {"fn", row.confusion.fn},
                    {"tn", row.confusion.tn},
                    {"support", row.support},
                    {"precision", optional_metric_json(row.precision)},
                    {"recall", optional_metric_json(row.recall)}});
  }
  j["per_option"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace lexchain
