#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lexchain/question_bank.hpp"

namespace lexchain {

// One pre-extracted contract clause.
struct ClauseItem {
  std::string id;
  std::string concept_name;
  std::string clause_text;
  std::optional<std::string> source;

  bool operator==(const ClauseItem&) const = default;
};

struct GoldAnnotation {
  std::string clause_id;
  std::string question_id;
  std::set<char> gold;

  bool operator==(const GoldAnnotation&) const = default;
};

struct Dataset {
  std::vector<ClauseItem> items;
  std::vector<GoldAnnotation> annotations;

  const ClauseItem* find_item(const std::string& clause_id) const;
  const GoldAnnotation* find_annotation(const std::string& clause_id,
                                        const std::string& question_id) const;
};

struct Violation {
  std::string record;  // "clause_id/question_id" locator
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Non-throwing consistency check; violations are data, not errors.
ValidationReport validate(const Dataset& dataset, const QuestionBank& bank);

// Parses the JSONL dataset format (one {"clause_id", "question_id", "concept",
// "clause_text", "gold": [...]} object per line) and enforces all invariants
// against the bank. Throws ValidationError naming the offending record.
Dataset load_dataset(const std::filesystem::path& path, const QuestionBank& bank);
Dataset parse_dataset(const std::string& jsonl_text, const QuestionBank& bank);

// Convenience overload against the bundled default bank.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace lexchain
