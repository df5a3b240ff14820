#pragma once

#include <stdexcept>
#include <string>

namespace lexchain {

// Failure classes map 1:1 onto CLI exit codes (see exit_code_for).
enum class ErrorClass {
  config,
  validation,
  provider,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& message)
      : std::runtime_error(message), class_(cls) {}

  ErrorClass error_class() const { return class_; }

 private:
  ErrorClass class_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorClass::config, message) {}
};

// Malformed or inconsistent input data: banks, datasets, templates, traces.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error(ErrorClass::validation, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorClass::io, message) {}
};

enum class ProviderErrorKind {
  network,         // connect failure, timeout, 5xx (retryable)
  rate_limited,    // 429 (retryable with backoff)
  authentication,  // 401/403 (never retried)
  malformed_response,
  unmatched_prompt,  // scripted mock had no rule and no default
  cache_miss,        // replay-only provider asked for an uncached request
  other,
};

class ProviderError : public Error {
 public:
  ProviderError(ProviderErrorKind kind, const std::string& message)
      : Error(ErrorClass::provider, message), kind_(kind) {}

  ProviderErrorKind kind() const { return kind_; }

 private:
  ProviderErrorKind kind_;
};

inline int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::config: return 2;
    case ErrorClass::validation: return 3;
    case ErrorClass::provider: return 4;
    case ErrorClass::io: return 5;
  }
  return 1;
}

}  // namespace lexchain
