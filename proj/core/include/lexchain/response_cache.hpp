#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "lexchain/provider.hpp"

namespace lexchain {

// Append-only JSON-lines store of completed requests, keyed by cache_key().
// One self-describing JSON object per line; reloading replays the log with
// last-entry-wins. Reads are concurrent, writes are serialized.
class CacheStore {
 public:
  // Creates the file lazily on first put. A missing file is an empty cache.
  explicit CacheStore(std::filesystem::path path);

  std::optional<CompletionResult> lookup(const std::string& key) const;
  void put(const std::string& key, const std::string& provider_id,
           const CompletionRequest& request, const CompletionResult& result);

  struct Stats {
    size_t entries = 0;
    uintmax_t file_bytes = 0;
  };
  Stats stats() const;

  // Drops entries older than the given age (all entries when unset) and
  // compacts the file. Returns the number of entries removed.
  size_t purge(std::optional<std::chrono::seconds> older_than = std::nullopt);

  const std::filesystem::path& path() const { return path_; }

 private:
  struct Entry {
    CompletionResult result;
    int64_t created_at_unix = 0;
    std::string line;  // original serialized form, kept for compaction
  };

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;
};

// Caching decorator over any provider. Identical concurrent requests are
// collapsed into a single upstream call (single-flight); completed results
// are persisted and replayed with from_cache = true.
class CachedProvider : public Provider {
 public:
  CachedProvider(std::shared_ptr<Provider> upstream, std::shared_ptr<CacheStore> store);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return upstream_->id(); }

  size_t hits() const { return hits_.load(); }
  size_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<Provider> upstream_;
  std::shared_ptr<CacheStore> store_;
  std::atomic<size_t> hits_{0};
  std::atomic<size_t> misses_{0};

  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_future<CompletionResult>> inflight_;
};

// Cache-only provider for offline re-runs: answers from the store and fails
// with a cache_miss provider error otherwise. `upstream_id` must name the
// provider the cache was populated with so that keys line up.
class ReplayProvider : public Provider {
 public:
  ReplayProvider(std::shared_ptr<CacheStore> store, std::string upstream_id);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return upstream_id_; }

 private:
  std::shared_ptr<CacheStore> store_;
  std::string upstream_id_;
};

}  // namespace lexchain
