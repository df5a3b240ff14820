#include "lexchain/question_bank.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>

#include "lexchain/errors.hpp"

using nlohmann::json;

namespace lexchain {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open question bank: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

char require_letter(const json& value, const std::string& where) {
  if (!value.is_string()) {
    throw ValidationError(where + ": option letter must be a string");
  }
  auto letter = normalize_letter(value.get<std::string>());
  if (!letter) {
    throw ValidationError(where + ": invalid option letter '" + value.get<std::string>() + "'");
  }
  return *letter;
}

void validate_question(const QuestionSpec& q) {
  const std::string where = "question " + (q.id.empty() ? "<missing id>" : q.id);
  if (q.id.empty()) {
    throw ValidationError(where + ": id is required");
  }
  if (q.concept_name.empty()) {
    throw ValidationError(where + ": concept is required");
  }
  if (q.question_text.empty()) {
    throw ValidationError(where + ": question_text is required");
  }
  if (q.options.empty()) {
    throw ValidationError(where + ": at least one option is required");
  }
  for (size_t i = 0; i < q.options.size(); ++i) {
    const char expected = static_cast<char>('a' + i);
    if (q.options[i].letter != expected) {
      throw ValidationError(where + ": option letters must be contiguous from 'a'; position " +
                            std::to_string(i) + " has '" + std::string(1, q.options[i].letter) +
                            "', expected '" + std::string(1, expected) + "'");
    }
    if (q.options[i].text.empty()) {
      throw ValidationError(where + ": option '" + std::string(1, expected) + "' has empty text");
    }
  }
  auto check_domain = [&](char letter, const char* role) {
    if (!q.has_letter(letter)) {
      throw ValidationError(where + ": " + role + " letter '" + std::string(1, letter) +
                            "' is not one of the question's options");
    }
  };
  for (char letter : q.exclusive_options) {
    check_domain(letter, "exclusive_options");
  }
  if (q.abstention_option) {
    check_domain(*q.abstention_option, "abstention_option");
  }
  if (q.catch_all_option) {
    check_domain(*q.catch_all_option, "catch_all_option");
  }
}

QuestionSpec parse_question(const json& jq) {
  if (!jq.is_object()) {
    throw ValidationError("question entries must be objects");
  }
  QuestionSpec q;
  q.id = jq.value("id", "");
  q.concept_name = jq.value("concept", "");
  q.question_text = jq.value("question_text", "");

  const std::string where = "question " + (q.id.empty() ? "<missing id>" : q.id);
  if (!jq.contains("options") || !jq.at("options").is_array()) {
    throw ValidationError(where + ": 'options' array is required");
  }
  std::set<char> seen;
  for (const auto& jo : jq.at("options")) {
    OptionSpec opt;
    opt.letter = require_letter(jo.at("letter"), where);
    opt.text = jo.value("text", "");
    if (!seen.insert(opt.letter).second) {
      throw ValidationError(where + ": duplicate option letter '" + std::string(1, opt.letter) + "'");
    }
    q.options.push_back(std::move(opt));
  }
  if (jq.contains("exclusive_options")) {
    for (const auto& jl : jq.at("exclusive_options")) {
      q.exclusive_options.insert(require_letter(jl, where));
    }
  }
  if (jq.contains("abstention_option") && !jq.at("abstention_option").is_null()) {
    q.abstention_option = require_letter(jq.at("abstention_option"), where);
  }
  if (jq.contains("catch_all_option") && !jq.at("catch_all_option").is_null()) {
    q.catch_all_option = require_letter(jq.at("catch_all_option"), where);
  }
  validate_question(q);
  return q;
}

}  // namespace

bool QuestionSpec::has_letter(char letter) const {
  return letter >= 'a' && letter < static_cast<char>('a' + options.size());
}

std::string QuestionSpec::concept_display_name() const {
  std::string spaced = concept_name;
  for (char& c : spaced) {
    if (c == '-' || c == '_') {
      c = ' ';
    }
  }
  // Title-case each word except short connectives ("Change of Control").
  std::istringstream words(spaced);
  std::string word;
  std::string titled;
  while (words >> word) {
    if (!titled.empty()) {
      titled.push_back(' ');
    }
    if (word != "of" && word != "and" && word != "or" && word != "the") {
      word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    }
    titled += word;
  }
  return titled;
}

std::optional<char> normalize_letter(const std::string& raw) {
  if (raw.size() != 1) {
    return std::nullopt;
  }
  const unsigned char c = static_cast<unsigned char>(raw[0]);
  if (!std::isalpha(c)) {
    return std::nullopt;
  }
  return static_cast<char>(std::tolower(c));
}

QuestionBank parse_question_bank(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) {
    throw ValidationError("question bank is not valid JSON");
  }
  if (!doc.is_object() || !doc.contains("questions") || !doc.at("questions").is_array()) {
    throw ValidationError("question bank must be an object with a 'questions' array");
  }
  QuestionBank bank;
  std::set<std::string> ids;
  for (const auto& jq : doc.at("questions")) {
    QuestionSpec q = parse_question(jq);
    if (!ids.insert(q.id).second) {
      throw ValidationError("duplicate question id '" + q.id + "'");
    }
    bank.push_back(std::move(q));
  }
  if (bank.empty()) {
    throw ValidationError("question bank contains no questions");
  }
  return bank;
}

QuestionBank load_question_bank(const std::filesystem::path& path) {
  try {
    return parse_question_bank(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string serialize_question_bank(const QuestionBank& bank) {
  json jqs = json::array();
  for (const auto& q : bank) {
    json jq;
    jq["id"] = q.id;
    jq["concept"] = q.concept_name;
    jq["question_text"] = q.question_text;
    json jopts = json::array();
    for (const auto& opt : q.options) {
      jopts.push_back({{"letter", std::string(1, opt.letter)}, {"text", opt.text}});
    }
    jq["options"] = std::move(jopts);
    json jexcl = json::array();
    for (char letter : q.exclusive_options) {
      jexcl.push_back(std::string(1, letter));
    }
    jq["exclusive_options"] = std::move(jexcl);
    jq["abstention_option"] =
        q.abstention_option ? json(std::string(1, *q.abstention_option)) : json(nullptr);
    jq["catch_all_option"] =
        q.catch_all_option ? json(std::string(1, *q.catch_all_option)) : json(nullptr);
    jqs.push_back(std::move(jq));
  }
  json doc;
  doc["questions"] = std::move(jqs);
  return doc.dump(2) + "\n";
}

const QuestionSpec* find_question(const QuestionBank& bank, const std::string& id) {
  for (const auto& q : bank) {
    if (q.id == id) {
      return &q;
    }
  }
  return nullptr;
}

}  // namespace lexchain
