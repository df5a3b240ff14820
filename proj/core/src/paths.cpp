#include "lexchain/paths.hpp"

#include <cstdlib>

namespace fs = std::filesystem;

namespace lexchain {
namespace {

fs::path resolve(const char* env_var, const char* compiled_default, const char* relative) {
  if (const char* env = std::getenv(env_var); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  fs::path compiled(compiled_default);
  std::error_code ec;
  if (fs::exists(compiled, ec)) {
    return compiled;
  }
  return fs::path(relative);
}

}  // namespace

fs::path default_templates_dir() {
  return resolve("LEXCHAIN_TEMPLATES", LEXCHAIN_SOURCE_TEMPLATE_DIR, "templates");
}

fs::path default_data_dir() {
  return resolve("LEXCHAIN_DATA", LEXCHAIN_SOURCE_DATA_DIR, "data");
}

fs::path default_bank_path() {
  return default_data_dir() / "question_bank.json";
}

}  // namespace lexchain
