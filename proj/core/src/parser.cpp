#include "lexchain/parser.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <vector>

using nlohmann::json;

namespace lexchain {
namespace {

// Given raw[start] == '[', returns the index one past the matching ']' or
// npos. Tracks JSON string literals so brackets inside strings do not count.
size_t balanced_array_end(const std::string& raw, size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = start; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
      if (depth == 0) {
        return i + 1;
      }
    }
  }
  return std::string::npos;
}

bool is_valid_json(const std::string& text) {
  return !json::parse(text, nullptr, false).is_discarded();
}

PredictionSet unparseable(std::string reason) {
  PredictionSet p;
  p.unparseable = true;
  p.unparseable_reason = std::move(reason);
  return p;
}

std::string strip_abstention_noise(const std::string& raw) {
  // UTF-8 curly quotes the models occasionally substitute for ASCII ones.
  static const std::vector<std::string> multi_byte = {"“", "”", "‘", "’"};
  std::string s = raw;
  auto is_noise_edge = [&](bool leading) -> bool {
    if (s.empty()) {
      return false;
    }
    for (const auto& q : multi_byte) {
      if (leading ? s.rfind(q, 0) == 0 : s.size() >= q.size() && s.compare(s.size() - q.size(), q.size(), q) == 0) {
        s.erase(leading ? 0 : s.size() - q.size(), q.size());
        return true;
      }
    }
    const unsigned char c = static_cast<unsigned char>(leading ? s.front() : s.back());
    if (std::isspace(c) || c == '"' || c == '\'' || c == '`') {
      s.erase(leading ? 0 : s.size() - 1, 1);
      return true;
    }
    if (!leading && (c == '.' || c == ',' || c == ';' || c == ':' || c == '!')) {
      s.erase(s.size() - 1, 1);
      return true;
    }
    return false;
  };
  while (is_noise_edge(true)) {
  }
  while (is_noise_edge(false)) {
  }
  return s;
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

const char* to_string(ConstraintMode mode) {
  return mode == ConstraintMode::observe ? "observe" : "enforce";
}

std::optional<ConstraintMode> constraint_mode_from_string(const std::string& s) {
  if (s == "observe") {
    return ConstraintMode::observe;
  }
  if (s == "enforce") {
    return ConstraintMode::enforce;
  }
  return std::nullopt;
}

PayloadScan extract_payload(const std::string& raw) {
  PayloadScan scan;
  size_t pos = 0;
  while (pos < raw.size()) {
    size_t start = raw.find('[', pos);
    if (start == std::string::npos) {
      break;
    }
    size_t end = balanced_array_end(raw, start);
    if (end == std::string::npos) {
      pos = start + 1;
      continue;
    }
    std::string candidate = raw.substr(start, end - start);
    if (!is_valid_json(candidate)) {
      pos = start + 1;
      continue;
    }
    if (!scan.payload) {
      scan.payload = std::move(candidate);
    } else {
      scan.multiple = true;
      break;
    }
    pos = end;
  }
  return scan;
}

PredictionSet parse_buckets(const std::string& payload, const QuestionSpec& question) {
  json doc = json::parse(payload, nullptr, false);
  if (doc.is_discarded()) {
    return unparseable("payload is not valid JSON");
  }
  if (!doc.is_array()) {
    return unparseable("payload is not a JSON array");
  }

  PredictionSet p;
  for (const auto& element : doc) {
    if (!element.is_object()) {
      return unparseable("array element is not an object");
    }
    if (!element.contains("bucket")) {
      return unparseable("array element has no \"bucket\" field");
    }
    const auto& bucket = element.at("bucket");
    if (!bucket.is_string()) {
      return unparseable("\"bucket\" value is not a string");
    }
    const std::string raw_letter = bucket.get<std::string>();
    auto letter = normalize_letter(raw_letter);
    if (!letter) {
      // The output contract says "character"; longer values are model
      // noncompliance, not something to coerce.
      return unparseable("\"bucket\" value '" + raw_letter + "' is not a single letter");
    }
    if (!question.has_letter(*letter)) {
      return unparseable("bucket letter '" + std::string(1, *letter) +
                         "' is outside the options of " + question.id);
    }
    p.selected.insert(*letter);
    if (element.contains("explanation") && element.at("explanation").is_string()) {
      p.explanations.try_emplace(*letter, element.at("explanation").get<std::string>());
    }
  }
  return p;
}

std::optional<PredictionSet> classify_abstention(const std::string& raw,
                                                 const QuestionSpec& question) {
  if (to_lower(strip_abstention_noise(raw)) != "unable to determine") {
    return std::nullopt;
  }
  PredictionSet p;
  p.abstained = true;
  if (question.abstention_option) {
    p.selected.insert(*question.abstention_option);
  }
  return p;
}

PredictionSet apply_constraints(PredictionSet prediction, const QuestionSpec& question,
                                ConstraintMode mode) {
  if (prediction.unparseable || prediction.selected.size() <= 1) {
    return prediction;
  }
  for (char exclusive : question.exclusive_options) {
    if (prediction.selected.count(exclusive) == 0) {
      continue;
    }
    std::string others;
    for (char letter : prediction.selected) {
      if (letter != exclusive) {
        if (!others.empty()) {
          others += ", ";
        }
        others.push_back(letter);
      }
    }
    if (!prediction.constraint_violation) {
      prediction.constraint_violation = std::string("exclusive option '") + exclusive +
                                        "' selected together with {" + others + "}";
    }
    if (mode == ConstraintMode::enforce) {
      prediction.selected = {exclusive};
    }
    break;
  }
  return prediction;
}

PredictionSet parse_response(const std::string& raw, const QuestionSpec& question,
                             ConstraintMode mode) {
  PayloadScan scan = extract_payload(raw);
  if (scan.payload) {
    PredictionSet p = parse_buckets(*scan.payload, question);
    p.multiple_payloads = scan.multiple;
    if (p.unparseable) {
      return p;
    }
    return apply_constraints(std::move(p), question, mode);
  }
  if (auto abstained = classify_abstention(raw, question)) {
    return *abstained;
  }
  return unparseable("no JSON array found and no abstention phrase matched");
}

}  // namespace lexchain
