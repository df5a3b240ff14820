#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lexchain/parser.hpp"
#include "lexchain/question_bank.hpp"

namespace lexchain {

// Exact fraction; all metrics are integer ratios and are kept that way so
// results can be compared against reference implementations with no
// tolerance. Always normalized: den > 0, gcd(|num|, den) == 1.
struct Ratio {
  int64_t num = 0;
  int64_t den = 1;

  static Ratio of(int64_t num, int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  bool operator==(const Ratio&) const = default;
};

Ratio add(Ratio a, Ratio b);
Ratio divide(Ratio a, int64_t divisor);

// One scored item: what the model selected vs the gold annotation.
// Unparseable or failed runs carry an empty selection, which is how they
// hurt exact match and recall instead of being dropped.
struct ScoredItem {
  std::string clause_id;
  std::set<char> selected;
  std::set<char> gold;
  bool abstained = false;
  bool unparseable = false;
};

struct OptionConfusion {
  char option = 'a';
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t tn = 0;

  bool operator==(const OptionConfusion&) const = default;
};

// Fraction of items whose selected set equals the gold set exactly.
Ratio exact_match_accuracy(const std::vector<ScoredItem>& items);

OptionConfusion option_confusion(const std::vector<ScoredItem>& items, char option);

// precision = tp/(tp+fp), recall = tp/(tp+fn); a zero denominator makes the
// component undefined (a value, not an error).
std::pair<std::optional<Ratio>, std::optional<Ratio>> precision_recall(const OptionConfusion& c);

struct MacroAverage {
  Ratio mean;
  int excluded = 0;  // options with an undefined value, never imputed
};

// Arithmetic mean over the defined values. Throws ValidationError when every
// value is undefined.
MacroAverage macro_average(const std::vector<std::optional<Ratio>>& values);

// Micro average over decisions: pooled tp/(tp+fp) and tp/(tp+fn).
std::pair<std::optional<Ratio>, std::optional<Ratio>> micro_average(
    const std::vector<OptionConfusion>& confusions);

struct PerOptionRow {
  OptionConfusion confusion;
  std::optional<Ratio> precision;
  std::optional<Ratio> recall;
  int64_t support = 0;  // tp + fn
};

struct EvalCounts {
  int64_t scored = 0;  // items in the metric denominators (runs + failures)
  int64_t abstained = 0;
  int64_t unparseable = 0;
  int64_t skipped = 0;
  int64_t failures = 0;
};

struct EvalReport {
  std::string question_id;
  std::string template_id;
  std::string model_id;
  ConstraintMode constraint_mode = ConstraintMode::observe;

  Ratio exact_match;
  int64_t exact_matches = 0;
  std::vector<PerOptionRow> per_option;
  std::optional<Ratio> macro_precision;
  std::optional<Ratio> macro_recall;
  int excluded_precision_options = 0;
  int excluded_recall_options = 0;
  std::optional<Ratio> micro_precision;
  std::optional<Ratio> micro_recall;
  EvalCounts counts;
};

EvalReport build_report(const std::vector<ScoredItem>& items, const QuestionSpec& question,
                        EvalCounts counts);

}  // namespace lexchain
