#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lexchain/chain.hpp"
#include "lexchain/dataset.hpp"
#include "lexchain/metrics.hpp"

namespace lexchain {

enum class AverageKind { macro, micro };

const char* to_string(AverageKind kind);
std::optional<AverageKind> average_kind_from_string(const std::string& s);

// One (prompt, model, question) cell of the summary grid: exact match plus
// averaged precision/recall, each optional so sparse grids render blanks.
struct SummaryCell {
  std::string prompt;
  std::string model;
  std::string question;
  std::optional<double> exact_match;
  std::optional<double> precision;
  std::optional<double> recall;
};

// One (prompt, model, question, option) cell of the per-option grid.
struct PerOptionCell {
  std::string prompt;
  std::string model;
  std::string question;
  char option = 'a';
  std::optional<double> precision;
  std::optional<double> recall;
};

// Re-scores a trace against gold annotations, re-parsing every raw response
// under the given constraint mode (traces record prompts and raw outputs, so
// parser policy can change without re-querying models). Failure records score
// as empty selections. Throws ValidationError on unknown clause ids, mixed
// trace identities, or an empty trace.
EvalReport score_trace(const TraceFile& trace, const Dataset& dataset, const QuestionBank& bank,
                       ConstraintMode mode);

// Summary-grid rows: prompt x {Exact Match, Precision, Recall}; columns:
// model x question. First-appearance order everywhere; duplicate cells are an
// error naming the collision.
std::string render_summary_grid(const std::vector<SummaryCell>& cells);
std::string summary_cells_to_csv(const std::vector<SummaryCell>& cells);

// Per-option grid rows: model x option; columns: prompt x (P, R); one block
// per question.
std::string render_per_option_grid(const std::vector<PerOptionCell>& cells);
std::string per_option_cells_to_csv(const std::vector<PerOptionCell>& cells);

struct ReportCells {
  std::vector<SummaryCell> summary;
  std::vector<PerOptionCell> per_option;
};

// Values file: a JSON array of cell objects. Elements with an "option" field
// are per-option cells, the rest summary cells. Lets published tables be
// rendered as fixtures without model access.
ReportCells load_report_values(const std::filesystem::path& path);
ReportCells parse_report_values(const std::string& json_text);

SummaryCell summary_cell_from_report(const EvalReport& report, AverageKind average);
std::vector<PerOptionCell> per_option_cells_from_report(const EvalReport& report);

// Eval report emitters (text / CSV / JSON). The average kind selects which
// precision/recall pair is the headline; the JSON form carries both.
std::string render_eval_text(const EvalReport& report, AverageKind average);
std::string eval_report_to_csv(const EvalReport& report, AverageKind average);
std::string eval_report_to_json(const EvalReport& report, AverageKind average);

// "0.47"; blank-cell placeholder when unset.
std::string format_metric(std::optional<double> value, const char* placeholder = "");

}  // namespace lexchain
