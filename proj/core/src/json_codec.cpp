#include "json_codec.hpp"

#include "lexchain/errors.hpp"

using nlohmann::json;

namespace lexchain {
namespace {

json letters_to_json(const std::set<char>& letters) {
  json arr = json::array();
  for (char c : letters) {
    arr.push_back(std::string(1, c));
  }
  return arr;
}

std::set<char> letters_from_json(const json& arr) {
  std::set<char> out;
  for (const auto& j : arr) {
    const std::string s = j.get<std::string>();
    auto letter = normalize_letter(s);
    if (!letter) {
      throw ValidationError("invalid option letter '" + s + "' in serialized prediction");
    }
    out.insert(*letter);
  }
  return out;
}

json optional_string(const std::optional<std::string>& value) {
  return value ? json(*value) : json(nullptr);
}

std::optional<std::string> optional_string_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return j.at(key).get<std::string>();
}

}  // namespace

json prediction_to_json_obj(const PredictionSet& p) {
  json j;
  j["selected"] = letters_to_json(p.selected);
  j["abstained"] = p.abstained;
  j["unparseable"] = p.unparseable;
  j["unparseable_reason"] = optional_string(p.unparseable_reason);
  j["constraint_violation"] = optional_string(p.constraint_violation);
  if (p.explanations.empty()) {
    j["explanations"] = nullptr;
  } else {
    json ex = json::object();
    for (const auto& [letter, text] : p.explanations) {
      ex[std::string(1, letter)] = text;
    }
    j["explanations"] = std::move(ex);
  }
  j["multiple_payloads"] = p.multiple_payloads;
  return j;
}

PredictionSet prediction_from_json_obj(const json& j) {
  PredictionSet p;
  if (j.contains("selected")) {
    p.selected = letters_from_json(j.at("selected"));
  }
  p.abstained = j.value("abstained", false);
  p.unparseable = j.value("unparseable", false);
  p.unparseable_reason = optional_string_from(j, "unparseable_reason");
  p.constraint_violation = optional_string_from(j, "constraint_violation");
  if (j.contains("explanations") && j.at("explanations").is_object()) {
    for (const auto& [key, value] : j.at("explanations").items()) {
      auto letter = normalize_letter(key);
      if (!letter) {
        throw ValidationError("invalid explanation letter '" + key + "'");
      }
      p.explanations[*letter] = value.get<std::string>();
    }
  }
  p.multiple_payloads = j.value("multiple_payloads", false);
  return p;
}

std::string prediction_to_json(const PredictionSet& prediction) {
  return prediction_to_json_obj(prediction).dump();
}

PredictionSet prediction_from_json(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError("serialized prediction is not a JSON object");
  }
  return prediction_from_json_obj(j);
}

json chain_run_to_json_obj(const ChainRun& run) {
  json j;
  j["record"] = "run";
  j["clause_id"] = run.clause_id;
  j["question_id"] = run.question_id;
  j["template_id"] = run.template_id;
  j["model_id"] = run.model_id;
  j["constraint_mode"] = to_string(run.constraint_mode);
  j["temperature"] = run.temperature;
  j["stage1_prompt"] = optional_string(run.stage1_prompt);
  j["stage1_raw"] = optional_string(run.stage1_raw);
  j["final_prompt"] = run.final_prompt;
  j["final_raw"] = run.final_raw;
  j["stage_template_versions"] = run.stage_template_versions;
  json finishes = json::array();
  for (FinishReason r : run.stage_finish) {
    finishes.push_back(to_string(r));
  }
  j["stage_finish"] = std::move(finishes);
  j["stage_latency_ms"] = run.stage_latency_ms;
  j["provider_calls"] = run.provider_calls;
  j["prediction"] = prediction_to_json_obj(run.prediction);
  return j;
}

ChainRun chain_run_from_json_obj(const json& j) {
  ChainRun run;
  run.clause_id = j.value("clause_id", "");
  run.question_id = j.value("question_id", "");
  run.template_id = j.value("template_id", "");
  run.model_id = j.value("model_id", "");
  if (auto mode = constraint_mode_from_string(j.value("constraint_mode", "observe"))) {
    run.constraint_mode = *mode;
  }
  run.temperature = j.value("temperature", 0.0);
  run.stage1_prompt = optional_string_from(j, "stage1_prompt");
  run.stage1_raw = optional_string_from(j, "stage1_raw");
  run.final_prompt = j.value("final_prompt", "");
  run.final_raw = j.value("final_raw", "");
  if (j.contains("stage_template_versions")) {
    run.stage_template_versions = j.at("stage_template_versions").get<std::vector<int>>();
  }
  if (j.contains("stage_finish")) {
    for (const auto& jr : j.at("stage_finish")) {
      if (auto reason = finish_reason_from_string(jr.get<std::string>())) {
        run.stage_finish.push_back(*reason);
      } else {
        throw ValidationError("unknown finish reason in trace: " + jr.get<std::string>());
      }
    }
  }
  if (j.contains("stage_latency_ms")) {
    run.stage_latency_ms = j.at("stage_latency_ms").get<std::vector<int64_t>>();
  }
  run.provider_calls = j.value("provider_calls", 0);
  if (j.contains("prediction") && j.at("prediction").is_object()) {
    run.prediction = prediction_from_json_obj(j.at("prediction"));
  }
  return run;
}

}  // namespace lexchain
