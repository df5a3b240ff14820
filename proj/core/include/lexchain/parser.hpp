#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "lexchain/question_bank.hpp"

namespace lexchain {

enum class ConstraintMode {
  observe,  // record violations, leave the selection untouched (evaluation default)
  enforce,  // reduce to the exclusive option (pipeline output default)
};

const char* to_string(ConstraintMode mode);
std::optional<ConstraintMode> constraint_mode_from_string(const std::string& s);

// Structured outcome of parsing one raw model response. Exactly one of
// {parsed, abstained, unparseable} holds: parsed means !abstained &&
// !unparseable (the selection may still be empty).
struct PredictionSet {
  std::set<char> selected;
  bool abstained = false;
  bool unparseable = false;
  std::optional<std::string> unparseable_reason;
  std::optional<std::string> constraint_violation;
  std::map<char, std::string> explanations;
  bool multiple_payloads = false;  // more than one JSON array in the raw text

  bool operator==(const PredictionSet&) const = default;
};

struct PayloadScan {
  std::optional<std::string> payload;  // first syntactically valid JSON array
  bool multiple = false;
};

// Finds the first valid JSON array in raw text: bare, inside a fenced code
// block, or embedded in prose. Bracketed fragments that are not valid JSON
// (common in legal text) are skipped. Total over arbitrary byte strings.
PayloadScan extract_payload(const std::string& raw);

// Interprets a JSON array of {"bucket": <character>} objects, with an
// optional per-bucket "explanation" field. Letters are lowercased and
// deduplicated; anything outside the question's options or off-contract
// (multi-character buckets, non-object elements) marks the whole parse
// unparseable with a reason.
PredictionSet parse_buckets(const std::string& payload, const QuestionSpec& question);

// Matches the mandated abstention phrase "Unable to determine" (exact modulo
// case, surrounding quotes/punctuation/whitespace). For questions with an
// abstention option the abstention is represented as that letter.
std::optional<PredictionSet> classify_abstention(const std::string& raw,
                                                 const QuestionSpec& question);

// Applies the question's exclusivity rule. Idempotent in both modes; an
// existing violation note is never cleared.
PredictionSet apply_constraints(PredictionSet prediction, const QuestionSpec& question,
                                ConstraintMode mode);

// Full pipeline: extract -> parse -> constraints, falling back to abstention
// matching and finally to an unparseable marker.
PredictionSet parse_response(const std::string& raw, const QuestionSpec& question,
                             ConstraintMode mode);

// Canonical JSON form used by trace files and the golden parser corpus.
std::string prediction_to_json(const PredictionSet& prediction);
PredictionSet prediction_from_json(const std::string& json_text);

}  // namespace lexchain
