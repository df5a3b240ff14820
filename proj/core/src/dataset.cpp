#include "lexchain/dataset.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

#include "lexchain/errors.hpp"
#include "lexchain/paths.hpp"

using nlohmann::json;

namespace lexchain {
namespace {

struct RawRecord {
  GoldAnnotation annotation;
  std::vector<std::string> gold_raw;  // as listed in the input, before set-ification
  ClauseItem item;
  size_t line = 0;
};

std::string locator(const RawRecord& r) {
  return r.annotation.clause_id + "/" + r.annotation.question_id + " (line " +
         std::to_string(r.line) + ")";
}

RawRecord parse_record(const std::string& line_text, size_t line_no) {
  json j = json::parse(line_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError("line " + std::to_string(line_no) + ": not a JSON object");
  }
  RawRecord r;
  r.line = line_no;
  r.annotation.clause_id = j.value("clause_id", "");
  r.annotation.question_id = j.value("question_id", "");
  r.item.id = r.annotation.clause_id;
  r.item.concept_name = j.value("concept", "");
  r.item.clause_text = j.value("clause_text", "");
  if (j.contains("source") && j.at("source").is_string()) {
    r.item.source = j.at("source").get<std::string>();
  }
  if (r.annotation.clause_id.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": clause_id is required");
  }
  if (r.annotation.question_id.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": question_id is required");
  }
  if (!j.contains("gold") || !j.at("gold").is_array()) {
    throw ValidationError(locator(r) + ": 'gold' array is required");
  }
  for (const auto& jl : j.at("gold")) {
    if (!jl.is_string()) {
      throw ValidationError(locator(r) + ": gold letters must be strings");
    }
    r.gold_raw.push_back(jl.get<std::string>());
  }
  return r;
}

}  // namespace

const ClauseItem* Dataset::find_item(const std::string& clause_id) const {
  for (const auto& item : items) {
    if (item.id == clause_id) {
      return &item;
    }
  }
  return nullptr;
}

const GoldAnnotation* Dataset::find_annotation(const std::string& clause_id,
                                               const std::string& question_id) const {
  for (const auto& a : annotations) {
    if (a.clause_id == clause_id && a.question_id == question_id) {
      return &a;
    }
  }
  return nullptr;
}

ValidationReport validate(const Dataset& dataset, const QuestionBank& bank) {
  ValidationReport report;
  auto flag = [&](const GoldAnnotation& a, const std::string& message) {
    report.violations.push_back({a.clause_id + "/" + a.question_id, message});
  };

  std::set<std::pair<std::string, std::string>> seen_pairs;
  for (const auto& a : dataset.annotations) {
    if (!seen_pairs.insert({a.clause_id, a.question_id}).second) {
      flag(a, "duplicate (clause_id, question_id) pair");
    }
    const ClauseItem* item = dataset.find_item(a.clause_id);
    if (item == nullptr) {
      flag(a, "annotation references unknown clause '" + a.clause_id + "'");
    }
    const QuestionSpec* q = find_question(bank, a.question_id);
    if (q == nullptr) {
      flag(a, "annotation references unknown question '" + a.question_id + "'");
      continue;
    }
    if (item != nullptr && item->concept_name != q->concept_name) {
      // Not fatal for batch runs (such items are skipped), but worth surfacing.
      flag(a, "clause concept '" + item->concept_name + "' does not match question concept '" +
                  q->concept_name + "'");
    }
    if (a.gold.empty()) {
      flag(a, "gold set is empty");
    }
    for (char letter : a.gold) {
      if (!q->has_letter(letter)) {
        flag(a, std::string("gold letter '") + letter + "' is outside the question's options");
      }
    }
    for (char letter : q->exclusive_options) {
      if (a.gold.count(letter) != 0 && a.gold.size() > 1) {
        flag(a, std::string("gold contains exclusive option '") + letter +
                    "' together with other letters");
      }
    }
  }

  std::set<std::string> item_ids;
  for (const auto& item : dataset.items) {
    if (!item_ids.insert(item.id).second) {
      report.violations.push_back({item.id, "duplicate clause id"});
    }
    if (item.clause_text.empty()) {
      report.violations.push_back({item.id, "clause_text is empty"});
    }
  }
  return report;
}

Dataset parse_dataset(const std::string& jsonl_text, const QuestionBank& bank) {
  Dataset dataset;
  std::map<std::string, size_t> item_index_by_id;

  std::istringstream in(jsonl_text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    RawRecord r = parse_record(line, line_no);

    // Gold is a set; duplicated letters indicate annotation errors.
    for (const auto& raw : r.gold_raw) {
      auto letter = normalize_letter(raw);
      if (!letter) {
        throw ValidationError(locator(r) + ": invalid gold letter '" + raw + "'");
      }
      if (!r.annotation.gold.insert(*letter).second) {
        throw ValidationError(locator(r) + ": duplicate gold letter '" + raw + "'");
      }
    }

    auto [it, inserted] = item_index_by_id.try_emplace(r.item.id, dataset.items.size());
    if (inserted) {
      dataset.items.push_back(r.item);
    } else if (dataset.items[it->second].clause_text != r.item.clause_text) {
      throw ValidationError(locator(r) + ": clause text conflicts with an earlier record for '" +
                            r.item.id + "'");
    }
    dataset.annotations.push_back(std::move(r.annotation));
  }

  ValidationReport report = validate(dataset, bank);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    std::string msg = "dataset invariant violation at " + v.record + ": " + v.message;
    if (report.violations.size() > 1) {
      msg += " (+" + std::to_string(report.violations.size() - 1) + " more)";
    }
    throw ValidationError(msg);
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, const QuestionBank& bank) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str(), bank);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  return load_dataset(path, load_question_bank(default_bank_path()));
}

}  // namespace lexchain
