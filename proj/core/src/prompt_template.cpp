#include "lexchain/prompt_template.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "lexchain/errors.hpp"

namespace fs = std::filesystem;

namespace lexchain {
namespace {

constexpr std::array<const char*, 5> kKnownSlots = {
    kSlotClauseName, kSlotClause, kSlotQuestion, kSlotOptions, kSlotResponse};

bool is_known_slot(const std::string& name) {
  return std::find(kKnownSlots.begin(), kKnownSlots.end(), name) != kKnownSlots.end();
}

std::string asset_label(const PromptTemplate& t) {
  return "(" + t.id + ", " + t.question_id + ", stage " + std::to_string(t.stage) + ")";
}

// Walks {{NAME}} markers; cb(name) for each well-formed marker, pass-through
// text goes to out when out != nullptr.
template <typename Callback>
void scan_markers(const std::string& body, std::string* out, Callback&& cb) {
  size_t pos = 0;
  while (pos < body.size()) {
    size_t open = body.find("{{", pos);
    if (open == std::string::npos) {
      if (out) out->append(body, pos, std::string::npos);
      return;
    }
    size_t close = body.find("}}", open + 2);
    if (close == std::string::npos) {
      if (out) out->append(body, pos, std::string::npos);
      return;
    }
    if (out) out->append(body, pos, open - pos);
    std::string name = body.substr(open + 2, close - open - 2);
    cb(name, out);
    pos = close + 2;
  }
}

const std::string* binding_for(const SlotBindings& bindings, const std::string& slot) {
  if (slot == kSlotClauseName) return &bindings.clause_name;
  if (slot == kSlotClause) return &bindings.clause;
  if (slot == kSlotQuestion) return &bindings.question;
  if (slot == kSlotOptions) return &bindings.options_text;
  if (slot == kSlotResponse) return bindings.response ? &*bindings.response : nullptr;
  return nullptr;
}

}  // namespace

std::vector<std::string> PromptTemplate::referenced_slots() const {
  std::vector<std::string> slots;
  scan_markers(body, nullptr, [&](const std::string& name, std::string*) {
    if (std::find(slots.begin(), slots.end(), name) == slots.end()) {
      slots.push_back(name);
    }
  });
  return slots;
}

std::string render_options(const std::vector<OptionSpec>& options) {
  std::string out;
  for (const auto& opt : options) {
    if (!out.empty()) {
      out.push_back('\n');
    }
    out.push_back(opt.letter);
    out += ") ";
    out += opt.text;
  }
  return out;
}

std::string render(const PromptTemplate& tmpl, const SlotBindings& bindings) {
  std::string out;
  out.reserve(tmpl.body.size());
  scan_markers(tmpl.body, &out, [&](const std::string& name, std::string* sink) {
    if (!is_known_slot(name)) {
      throw ValidationError("template " + asset_label(tmpl) + " contains unknown slot marker {{" +
                            name + "}}");
    }
    const std::string* value = binding_for(bindings, name);
    if (value == nullptr) {
      throw ValidationError("no binding for slot {{" + name + "}} required by template " +
                            asset_label(tmpl));
    }
    sink->append(*value);
  });
  return out;
}

PromptTemplate parse_template_asset(const std::string& file_text, const fs::path& source_path) {
  const std::string where =
      source_path.empty() ? std::string("<string>") : source_path.string();
  size_t eol = file_text.find('\n');
  if (eol == std::string::npos) {
    throw ValidationError(where + ": template asset has no body after the header line");
  }
  std::string header = file_text.substr(0, eol);
  if (header.rfind("# template", 0) != 0) {
    throw ValidationError(where + ": first line must start with '# template'");
  }

  PromptTemplate t;
  t.source_path = source_path;
  t.body = file_text.substr(eol + 1);

  std::istringstream fields(header.substr(std::string("# template").size()));
  std::string token;
  while (fields >> token) {
    size_t eq = token.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(where + ": malformed header token '" + token + "'");
    }
    std::string key = token.substr(0, eq);
    std::string value = token.substr(eq + 1);
    if (key == "id") {
      t.id = value;
    } else if (key == "question") {
      t.question_id = value;
    } else if (key == "stage") {
      t.stage = std::stoi(value);
    } else if (key == "version") {
      t.version = std::stoi(value);
    } else {
      throw ValidationError(where + ": unknown header field '" + key + "'");
    }
  }
  if (t.id.empty() || t.question_id.empty()) {
    throw ValidationError(where + ": header must carry id= and question=");
  }
  if (t.stage != 1 && t.stage != 2) {
    throw ValidationError(where + ": stage must be 1 or 2");
  }
  if (t.version < 1) {
    throw ValidationError(where + ": version must be >= 1");
  }

  for (const auto& slot : t.referenced_slots()) {
    if (!is_known_slot(slot)) {
      throw ValidationError(where + ": unknown slot marker {{" + slot + "}}");
    }
    if (slot == kSlotResponse && t.stage != 2) {
      throw ValidationError(where + ": {{RESPONSE}} may only appear in stage-2 assets");
    }
    if (slot == kSlotClause && t.stage == 2) {
      // Stage 2 of a chain sees only the stage-1 summary, never the clause.
      throw ValidationError(where + ": {{CLAUSE}} may not appear in stage-2 assets");
    }
  }
  return t;
}

TemplateStore TemplateStore::load_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("template directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  TemplateStore store;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw IoError("cannot open template asset: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    PromptTemplate t = parse_template_asset(buf.str(), path);
    auto key = std::make_tuple(t.id, t.question_id, t.stage);
    if (store.index_.count(key) != 0) {
      throw ValidationError("duplicate template asset " + asset_label(t) + " in " + dir.string());
    }
    store.index_.emplace(std::move(key), store.templates_.size());
    store.templates_.push_back(std::move(t));
  }
  if (store.templates_.empty()) {
    throw ValidationError("no template assets found in " + dir.string());
  }
  return store;
}

const PromptTemplate* TemplateStore::find(const std::string& id, const std::string& question_id,
                                          int stage) const {
  auto it = index_.find(std::make_tuple(id, question_id, stage));
  if (it == index_.end()) {
    it = index_.find(std::make_tuple(id, std::string("any"), stage));
  }
  if (it == index_.end()) {
    return nullptr;
  }
  return &templates_[it->second];
}

const PromptTemplate& TemplateStore::get(const std::string& id, const std::string& question_id,
                                         int stage) const {
  const PromptTemplate* t = find(id, question_id, stage);
  if (t == nullptr) {
    throw ValidationError("no template asset for (" + id + ", " + question_id + ", stage " +
                          std::to_string(stage) + ")");
  }
  return *t;
}

bool TemplateStore::is_two_stage(const std::string& id, const std::string& question_id) const {
  return find(id, question_id, 2) != nullptr;
}

}  // namespace lexchain
