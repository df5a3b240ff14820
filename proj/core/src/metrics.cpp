#include "lexchain/metrics.hpp"

#include <numeric>

#include "lexchain/errors.hpp"

namespace lexchain {

Ratio Ratio::of(int64_t num, int64_t den) {
  if (den == 0) {
    throw ValidationError("ratio with zero denominator");
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Ratio{num, den};
}

Ratio add(Ratio a, Ratio b) {
  return Ratio::of(a.num * b.den + b.num * a.den, a.den * b.den);
}

Ratio divide(Ratio a, int64_t divisor) {
  if (divisor == 0) {
    throw ValidationError("division of ratio by zero");
  }
  return Ratio::of(a.num, a.den * divisor);
}

Ratio exact_match_accuracy(const std::vector<ScoredItem>& items) {
  if (items.empty()) {
    throw ValidationError("exact match accuracy over zero items");
  }
  int64_t matches = 0;
  for (const auto& item : items) {
    if (item.selected == item.gold) {
      ++matches;
    }
  }
  return Ratio::of(matches, static_cast<int64_t>(items.size()));
}

OptionConfusion option_confusion(const std::vector<ScoredItem>& items, char option) {
  OptionConfusion c;
  c.option = option;
  for (const auto& item : items) {
    const bool in_gold = item.gold.count(option) != 0;
    const bool in_selected = item.selected.count(option) != 0;
    if (in_gold && in_selected) {
      ++c.tp;
    } else if (in_selected) {
      ++c.fp;
    } else if (in_gold) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

std::pair<std::optional<Ratio>, std::optional<Ratio>> precision_recall(const OptionConfusion& c) {
  std::optional<Ratio> precision;
  std::optional<Ratio> recall;
  if (c.tp + c.fp > 0) {
    precision = Ratio::of(c.tp, c.tp + c.fp);
  }
  if (c.tp + c.fn > 0) {
    recall = Ratio::of(c.tp, c.tp + c.fn);
  }
  return {precision, recall};
}

MacroAverage macro_average(const std::vector<std::optional<Ratio>>& values) {
  MacroAverage avg;
  Ratio sum{0, 1};
  int64_t defined = 0;
  for (const auto& v : values) {
    if (v) {
      sum = add(sum, *v);
      ++defined;
    } else {
      ++avg.excluded;
    }
  }
  if (defined == 0) {
    throw ValidationError("macro average over all-undefined values");
  }
  avg.mean = divide(sum, defined);
  return avg;
}

std::pair<std::optional<Ratio>, std::optional<Ratio>> micro_average(
    const std::vector<OptionConfusion>& confusions) {
  OptionConfusion pooled;
  for (const auto& c : confusions) {
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
    pooled.tn += c.tn;
  }
  return precision_recall(pooled);
}

EvalReport build_report(const std::vector<ScoredItem>& items, const QuestionSpec& question,
                        EvalCounts counts) {
  if (items.empty()) {
    throw ValidationError("cannot build a report from zero scored items");
  }
  for (const auto& item : items) {
    if (item.gold.empty()) {
      throw ValidationError("item '" + item.clause_id + "' has no gold annotation");
    }
  }

  EvalReport report;
  report.question_id = question.id;
  report.counts = counts;
  report.exact_match = exact_match_accuracy(items);
  for (const auto& item : items) {
    if (item.selected == item.gold) {
      ++report.exact_matches;
    }
  }

  std::vector<std::optional<Ratio>> precisions;
  std::vector<std::optional<Ratio>> recalls;
  std::vector<OptionConfusion> confusions;
  for (const auto& opt : question.options) {
    PerOptionRow row;
    row.confusion = option_confusion(items, opt.letter);
    auto [p, r] = precision_recall(row.confusion);
    row.precision = p;
    row.recall = r;
    row.support = row.confusion.tp + row.confusion.fn;
    precisions.push_back(p);
    recalls.push_back(r);
    confusions.push_back(row.confusion);
    report.per_option.push_back(std::move(row));
  }

  auto any_defined = [](const std::vector<std::optional<Ratio>>& values) {
    for (const auto& v : values) {
      if (v) {
        return true;
      }
    }
    return false;
  };
  if (any_defined(precisions)) {
    MacroAverage avg = macro_average(precisions);
    report.macro_precision = avg.mean;
    report.excluded_precision_options = avg.excluded;
  } else {
    report.excluded_precision_options = static_cast<int>(precisions.size());
  }
  if (any_defined(recalls)) {
    MacroAverage avg = macro_average(recalls);
    report.macro_recall = avg.mean;
    report.excluded_recall_options = avg.excluded;
  } else {
    report.excluded_recall_options = static_cast<int>(recalls.size());
  }
  auto [micro_p, micro_r] = micro_average(confusions);
  report.micro_precision = micro_p;
  report.micro_recall = micro_r;
  return report;
}

}  // namespace lexchain
