#include "lexchain/response_cache.hpp"

#include <json.hpp>

#include <ctime>
#include <fstream>

#include "lexchain/digest.hpp"
#include "lexchain/errors.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace lexchain {
namespace {

std::string iso8601_utc(int64_t unix_seconds) {
  std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json result_to_json(const CompletionResult& result) {
  json j;
  j["raw_text"] = result.raw_text;
  j["finish_reason"] = to_string(result.finish_reason);
  j["latency_ms"] = result.latency_ms;
  if (result.usage) {
    j["usage"] = {{"prompt_tokens", result.usage->prompt_tokens},
                  {"completion_tokens", result.usage->completion_tokens},
                  {"total_tokens", result.usage->total_tokens}};
  } else {
    j["usage"] = nullptr;
  }
  return j;
}

CompletionResult result_from_json(const json& j) {
  CompletionResult result;
  result.raw_text = j.value("raw_text", "");
  if (auto reason = finish_reason_from_string(j.value("finish_reason", "complete"))) {
    result.finish_reason = *reason;
  }
  result.latency_ms = j.value("latency_ms", int64_t{0});
  if (j.contains("usage") && j.at("usage").is_object()) {
    TokenUsage usage;
    usage.prompt_tokens = j.at("usage").value("prompt_tokens", int64_t{0});
    usage.completion_tokens = j.at("usage").value("completion_tokens", int64_t{0});
    usage.total_tokens = j.at("usage").value("total_tokens", int64_t{0});
    result.usage = usage;
  }
  return result;
}

}  // namespace

CacheStore::CacheStore(fs::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    return;
  }
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key")) {
      throw ValidationError(path_.string() + ": malformed cache entry at line " +
                            std::to_string(line_no));
    }
    Entry entry;
    entry.result = result_from_json(j.value("result", json::object()));
    entry.created_at_unix = j.value("created_at_unix", int64_t{0});
    entry.line = line;
    entries_[j.at("key").get<std::string>()] = std::move(entry);
  }
}

std::optional<CompletionResult> CacheStore::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second.result;
}

void CacheStore::put(const std::string& key, const std::string& provider_id,
                     const CompletionRequest& request, const CompletionResult& result) {
  const int64_t now = static_cast<int64_t>(std::time(nullptr));

  json j;
  j["key"] = key;
  j["provider"] = provider_id;
  j["model"] = request.model_id;
  j["temperature"] = request.temperature;
  j["max_output_tokens"] =
      request.max_output_tokens ? json(*request.max_output_tokens) : json(nullptr);
  j["template_version"] = request.template_version;
  // Request summary, not the full prompt: enough to audit what was cached.
  j["prompt_sha256"] = sha256_hex(request.prompt_text);
  j["prompt_chars"] = request.prompt_text.size();
  j["result"] = result_to_json(result);
  j["created_at_unix"] = now;
  j["created_at"] = iso8601_utc(now);

  Entry entry;
  entry.result = result;
  entry.result.from_cache = false;
  entry.created_at_unix = now;
  entry.line = j.dump();

  std::unique_lock lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) {
    throw IoError("cannot append to cache file: " + path_.string());
  }
  out << entry.line << '\n';
  out.flush();
  entries_[key] = std::move(entry);
}

CacheStore::Stats CacheStore::stats() const {
  std::shared_lock lock(mutex_);
  Stats stats;
  stats.entries = entries_.size();
  std::error_code ec;
  stats.file_bytes = fs::exists(path_, ec) ? fs::file_size(path_, ec) : 0;
  return stats;
}

size_t CacheStore::purge(std::optional<std::chrono::seconds> older_than) {
  const int64_t now = static_cast<int64_t>(std::time(nullptr));
  std::unique_lock lock(mutex_);
  size_t before = entries_.size();
  if (!older_than) {
    entries_.clear();
  } else {
    const int64_t cutoff = now - older_than->count();
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->second.created_at_unix <= cutoff) {
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
  }
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot rewrite cache file: " + path_.string());
  }
  for (const auto& [key, entry] : entries_) {
    out << entry.line << '\n';
  }
  return before - entries_.size();
}

CachedProvider::CachedProvider(std::shared_ptr<Provider> upstream,
                               std::shared_ptr<CacheStore> store)
    : upstream_(std::move(upstream)), store_(std::move(store)) {}

CompletionResult CachedProvider::complete(const CompletionRequest& request) {
  const std::string key = cache_key(upstream_->id(), request);

  // Store check and flight registration happen under one lock so exactly one
  // thread becomes the leader for a key. The leader writes the store entry
  // before dropping its flight, so late arrivals always see the cached value.
  std::promise<CompletionResult> promise;
  std::shared_future<CompletionResult> flight;
  bool leader = false;
  {
    std::lock_guard lock(inflight_mutex_);
    if (auto cached = store_->lookup(key)) {
      hits_.fetch_add(1);
      cached->from_cache = true;
      return *cached;
    }
    auto it = inflight_.find(key);
    if (it != inflight_.end()) {
      flight = it->second;
    } else {
      flight = promise.get_future().share();
      inflight_.emplace(key, flight);
      leader = true;
    }
  }

  if (!leader) {
    CompletionResult result = flight.get();
    hits_.fetch_add(1);
    result.from_cache = true;
    return result;
  }

  try {
    CompletionResult result = upstream_->complete(request);
    misses_.fetch_add(1);
    store_->put(key, upstream_->id(), request, result);
    promise.set_value(result);
    {
      std::lock_guard lock(inflight_mutex_);
      inflight_.erase(key);
    }
    result.from_cache = false;
    return result;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    throw;
  }
}

ReplayProvider::ReplayProvider(std::shared_ptr<CacheStore> store, std::string upstream_id)
    : store_(std::move(store)), upstream_id_(std::move(upstream_id)) {}

CompletionResult ReplayProvider::complete(const CompletionRequest& request) {
  if (auto cached = store_->lookup(cache_key(upstream_id_, request))) {
    cached->from_cache = true;
    return *cached;
  }
  throw ProviderError(ProviderErrorKind::cache_miss,
                      "replay cache has no entry for this request (model '" + request.model_id +
                          "', prompt sha256 " + sha256_hex(request.prompt_text) + ")");
}

}  // namespace lexchain
