#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "lexchain/dataset.hpp"
#include "lexchain/question_bank.hpp"

namespace testsup {

inline std::filesystem::path repo_root() {
  if (const char* env = std::getenv("LEXCHAIN_ROOT"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::filesystem::path(LEXCHAIN_TEST_ROOT);
}

inline std::filesystem::path templates_dir() { return repo_root() / "templates"; }
inline std::filesystem::path fixtures_dir() { return repo_root() / "fixtures"; }
inline std::filesystem::path bank_path() { return repo_root() / "data" / "question_bank.json"; }

inline const lexchain::QuestionBank& bundled_bank() {
  static lexchain::QuestionBank bank = lexchain::load_question_bank(bank_path());
  return bank;
}

inline const lexchain::QuestionSpec& question(const std::string& id) {
  const lexchain::QuestionSpec* q = lexchain::find_question(bundled_bank(), id);
  if (q == nullptr) {
    throw std::runtime_error("missing bundled question " + id);
  }
  return *q;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// Self-deleting scratch directory.
class TempDir {
 public:
  TempDir() {
    static std::atomic<uint64_t> counter{0};
    std::random_device rd;
    std::ostringstream name;
    name << "lexchain-test-" << rd() << "-" << counter.fetch_add(1);
    path_ = std::filesystem::temp_directory_path() / name.str();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsup
