#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lexchain {

// One lettered answer option of a question.
struct OptionSpec {
  char letter = 'a';  // lowercase a..z
  std::string text;

  bool operator==(const OptionSpec&) const = default;
};

struct QuestionSpec {
  std::string id;       // e.g. "Q1"
  std::string concept_name;  // e.g. "change-of-control"
  std::string question_text;
  std::vector<OptionSpec> options;  // letters are the prefix a, b, c, ...
  std::set<char> exclusive_options;
  std::optional<char> abstention_option;
  std::optional<char> catch_all_option;

  bool has_letter(char letter) const;
  // "change-of-control" -> "Change of Control"; used as the clause-name
  // slot binding in prompts.
  std::string concept_display_name() const;

  bool operator==(const QuestionSpec&) const = default;
};

using QuestionBank = std::vector<QuestionSpec>;

// Parses and validates a question bank document (JSON, see data/question_bank.json).
// Throws ValidationError on malformed or inconsistent content, IoError when
// the file cannot be read.
QuestionBank load_question_bank(const std::filesystem::path& path);
QuestionBank parse_question_bank(const std::string& json_text);

// Canonical serialization; load(serialize(bank)) == bank.
std::string serialize_question_bank(const QuestionBank& bank);

const QuestionSpec* find_question(const QuestionBank& bank, const std::string& id);

// Letter normalization shared by bank, dataset and parser code. Accepts
// one-character alphabetic strings in either case.
std::optional<char> normalize_letter(const std::string& raw);

}  // namespace lexchain
