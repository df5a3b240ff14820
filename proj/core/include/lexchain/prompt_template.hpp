#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexchain/question_bank.hpp"

namespace lexchain {

// Slot markers usable in template bodies. The {{NAME}} form was chosen over
// the single-bracket style because contracts routinely contain square
// brackets; double braces around an uppercase name do not occur in legal text.
inline constexpr const char* kSlotClauseName = "CLAUSE_NAME";
inline constexpr const char* kSlotClause = "CLAUSE";
inline constexpr const char* kSlotQuestion = "QUESTION";
inline constexpr const char* kSlotOptions = "OPTIONS";
inline constexpr const char* kSlotResponse = "RESPONSE";

struct PromptTemplate {
  std::string id;           // P1, P2, P3, P4, P5, P1-EXPLAIN, P4-PER-PARTY
  std::string question_id;  // Q1..Q4 or "any" for question-generic assets
  int stage = 1;            // 1 or 2
  int version = 1;          // bumping invalidates cached completions
  std::string body;
  std::filesystem::path source_path;

  // Slot names referenced by the body, in order of first appearance.
  std::vector<std::string> referenced_slots() const;
};

struct SlotBindings {
  std::string clause_name;
  std::string clause;
  std::string question;
  std::string options_text;
  std::optional<std::string> response;
};

// "a) ...\nb) ..." in bank order, no trailing newline.
std::string render_options(const std::vector<OptionSpec>& options);

// Replaces every slot marker with its binding; all other bytes pass through
// unchanged. Throws ValidationError for an unbound referenced slot or a
// marker outside the known slot set.
std::string render(const PromptTemplate& tmpl, const SlotBindings& bindings);

// Parses one asset: a header line "# template id=P3 question=Q1 stage=2 version=1"
// followed by the body (everything after the first newline, verbatim).
PromptTemplate parse_template_asset(const std::string& file_text,
                                    const std::filesystem::path& source_path = {});

// Immutable collection of template assets loaded from a directory of *.txt
// files. Lookup falls back from (id, question) to a question-generic asset
// with question "any".
class TemplateStore {
 public:
  static TemplateStore load_dir(const std::filesystem::path& dir);

  const PromptTemplate& get(const std::string& id, const std::string& question_id,
                            int stage) const;
  const PromptTemplate* find(const std::string& id, const std::string& question_id,
                             int stage) const;
  // A template id names a two-stage chain iff a stage-2 asset exists for it.
  bool is_two_stage(const std::string& id, const std::string& question_id) const;

  const std::vector<PromptTemplate>& all() const { return templates_; }

 private:
  std::vector<PromptTemplate> templates_;
  std::map<std::tuple<std::string, std::string, int>, size_t> index_;
};

}  // namespace lexchain
