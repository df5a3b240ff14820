#include "lexchain/provider.hpp"

#include <doctest.h>

#include <barrier>
#include <thread>

#include "lexchain/errors.hpp"
#include "lexchain/mock_provider.hpp"
#include "lexchain/response_cache.hpp"
#include "test_support.hpp"

using namespace lexchain;

namespace {

CompletionRequest request(const std::string& prompt, double temperature = 0.0, int version = 1) {
  CompletionRequest r;
  r.model_id = "test-model";
  r.prompt_text = prompt;
  r.temperature = temperature;
  r.template_version = version;
  return r;
}

}  // namespace

TEST_CASE("cache keys are deterministic and sensitive to every keyed field") {
  const CompletionRequest base = request("hello");
  CHECK(cache_key("mock", base) == cache_key("mock", base));

  CHECK(cache_key("mock", base) != cache_key("openai", base));
  CHECK(cache_key("mock", base) != cache_key("mock", request("hello!")));
  CHECK(cache_key("mock", base) != cache_key("mock", request("hello", 0.5)));
  CHECK(cache_key("mock", base) != cache_key("mock", request("hello", 0.0, 2)));

  CompletionRequest capped = base;
  capped.max_output_tokens = 128;
  CHECK(cache_key("mock", base) != cache_key("mock", capped));

  CompletionRequest other_model = base;
  other_model.model_id = "other";
  CHECK(cache_key("mock", base) != cache_key("mock", other_model));

  // Field boundaries are length-prefixed, so shuffling bytes between adjacent
  // fields cannot collide.
  CompletionRequest shifted = base;
  shifted.model_id = "test-modelh";
  shifted.prompt_text = "ello";
  CHECK(cache_key("mock", base) != cache_key("mock", shifted));
}

TEST_CASE("scripted mock answers in rule order and records calls") {
  MockScript script;
  script.rules.push_back({.contains = {"BEGIN TEXT"}, .response = "a summary"});
  script.rules.push_back({.contains = {"BEGIN"}, .response = "never reached for BEGIN TEXT"});
  script.rules.push_back({.equals = "exact prompt", .response = "exact reply"});
  ScriptedMockProvider mock(std::move(script));

  CHECK(mock.complete(request("xx BEGIN TEXT yy")).raw_text == "a summary");
  CHECK(mock.complete(request("exact prompt")).raw_text == "exact reply");
  CHECK_THROWS_AS(mock.complete(request("no rule covers this")), ProviderError);

  auto recorded = mock.recorded_requests();
  REQUIRE(recorded.size() == 3);
  CHECK(recorded[0].prompt_text == "xx BEGIN TEXT yy");
  CHECK(recorded[2].prompt_text == "no rule covers this");
}

TEST_CASE("scripted mock multi-needle rules require every needle") {
  MockScript script;
  script.rules.push_back({.contains = {"ALPHA", "BETA"}, .response = "both"});
  script.default_response = "fallback";
  ScriptedMockProvider mock(std::move(script));
  CHECK(mock.complete(request("ALPHA then BETA")).raw_text == "both");
  CHECK(mock.complete(request("ALPHA only")).raw_text == "fallback");
}

TEST_CASE("scripted mock failure injection and defaults") {
  MockScript script;
  script.rules.push_back(
      {.contains = {"flaky"}, .fail = ProviderErrorKind::network});
  script.default_response = "[{\"bucket\":\"a\"}]";
  ScriptedMockProvider mock(std::move(script));

  CHECK_THROWS_AS(mock.complete(request("flaky item")), ProviderError);
  CHECK(mock.complete(request("anything else")).raw_text == "[{\"bucket\":\"a\"}]");

  MockScript empty;
  ScriptedMockProvider strict(std::move(empty));
  try {
    strict.complete(request("anything"));
    FAIL("expected unmatched-prompt error");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderErrorKind::unmatched_prompt);
  }
}

TEST_CASE("mock script files parse") {
  MockScript script = load_mock_script(testsup::fixtures_dir() / "scripts" / "eval_demo.json");
  CHECK(script.rules.size() == 9);
  CHECK(script.rules[3].contains.size() == 2);
}

TEST_CASE("cache store persists entries across instances") {
  testsup::TempDir tmp;
  const auto path = tmp.file("cache.jsonl");
  const CompletionRequest req = request("prompt-1");
  const std::string key = cache_key("mock", req);

  {
    CacheStore store(path);
    CHECK_FALSE(store.lookup(key).has_value());
    CompletionResult result;
    result.raw_text = "cached text";
    result.finish_reason = FinishReason::complete;
    store.put(key, "mock", req, result);
    CHECK(store.stats().entries == 1);
  }
  CacheStore reloaded(path);
  auto hit = reloaded.lookup(key);
  REQUIRE(hit.has_value());
  CHECK(hit->raw_text == "cached text");
  CHECK(reloaded.stats().entries == 1);
}

TEST_CASE("cache purge removes everything or only old entries") {
  testsup::TempDir tmp;
  CacheStore store(tmp.file("cache.jsonl"));
  CompletionResult result;
  result.raw_text = "x";
  store.put("k1", "mock", request("p1"), result);
  store.put("k2", "mock", request("p2"), result);
  CHECK(store.stats().entries == 2);

  // Entries were created just now; a large age threshold keeps them.
  CHECK(store.purge(std::chrono::seconds(3600)) == 0);
  CHECK(store.stats().entries == 2);
  // Age zero matches everything created at or before now.
  CHECK(store.purge(std::chrono::seconds(0)) == 2);
  CHECK(store.stats().entries == 0);

  store.put("k3", "mock", request("p3"), result);
  CHECK(store.purge() == 1);
  CHECK(store.stats().entries == 0);
}

TEST_CASE("cached provider replays and counts upstream calls") {
  testsup::TempDir tmp;
  MockScript script;
  script.default_response = "reply";
  auto mock = std::make_shared<ScriptedMockProvider>(std::move(script));
  auto store = std::make_shared<CacheStore>(tmp.file("cache.jsonl"));
  CachedProvider cached(mock, store);

  CompletionResult first = cached.complete(request("same prompt"));
  CHECK_FALSE(first.from_cache);
  CompletionResult second = cached.complete(request("same prompt"));
  CHECK(second.from_cache);
  CHECK(second.raw_text == "reply");
  CHECK(mock->call_count() == 1);
  CHECK(cached.hits() == 1);
  CHECK(cached.misses() == 1);

  cached.complete(request("different prompt"));
  CHECK(mock->call_count() == 2);
}

TEST_CASE("upstream calls equal distinct cache keys over a request mix") {
  testsup::TempDir tmp;
  MockScript script;
  script.default_response = "r";
  auto mock = std::make_shared<ScriptedMockProvider>(std::move(script));
  auto store = std::make_shared<CacheStore>(tmp.file("cache.jsonl"));
  CachedProvider cached(mock, store);

  std::set<std::string> distinct;
  std::mt19937 rng(7);
  for (int i = 0; i < 60; ++i) {
    CompletionRequest r = request("prompt-" + std::to_string(rng() % 10), 0.0, 1 + (i % 3));
    distinct.insert(cache_key("mock", r));
    cached.complete(r);
  }
  CHECK(mock->call_count() == distinct.size());
}

TEST_CASE("provider errors are not cached") {
  testsup::TempDir tmp;
  MockScript script;
  script.rules.push_back({.contains = {"boom"}, .fail = ProviderErrorKind::network});
  auto mock = std::make_shared<ScriptedMockProvider>(std::move(script));
  auto store = std::make_shared<CacheStore>(tmp.file("cache.jsonl"));
  CachedProvider cached(mock, store);

  CHECK_THROWS_AS(cached.complete(request("boom")), ProviderError);
  CHECK_THROWS_AS(cached.complete(request("boom")), ProviderError);
  CHECK(mock->call_count() == 2);  // retried upstream, not served from cache
  CHECK(store->stats().entries == 0);
}

namespace {

// Provider that blocks every call until released; used to prove single-flight.
class BlockingProvider : public Provider {
 public:
  explicit BlockingProvider(std::barrier<>& gate) : gate_(gate) {}

  CompletionResult complete(const CompletionRequest&) override {
    calls_.fetch_add(1);
    gate_.arrive_and_wait();
    CompletionResult r;
    r.raw_text = "slow reply";
    return r;
  }
  std::string id() const override { return "blocking"; }
  int calls() const { return calls_.load(); }

 private:
  std::barrier<>& gate_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST_CASE("concurrent identical requests collapse into one upstream call") {
  testsup::TempDir tmp;
  // Two participants: the single leader thread inside complete(), and the
  // test body which releases it once the second requester is waiting.
  std::barrier gate(2);
  auto blocking = std::make_shared<BlockingProvider>(gate);
  auto store = std::make_shared<CacheStore>(tmp.file("cache.jsonl"));
  CachedProvider cached(blocking, store);

  std::atomic<int> from_cache_count{0};
  auto issue = [&] {
    CompletionResult r = cached.complete(request("identical"));
    CHECK(r.raw_text == "slow reply");
    from_cache_count.fetch_add(r.from_cache ? 1 : 0);
  };
  std::thread a(issue);
  std::thread b(issue);
  // Wait until one leader is parked at the gate, give the follower a moment
  // to park on the shared future, then release the leader.
  while (blocking->calls() == 0) {
    std::this_thread::yield();
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  gate.arrive_and_wait();
  a.join();
  b.join();

  CHECK(blocking->calls() == 1);
  CHECK(from_cache_count.load() == 1);  // exactly one request joined the flight
}

TEST_CASE("replay provider serves hits and refuses misses") {
  testsup::TempDir tmp;
  auto store = std::make_shared<CacheStore>(tmp.file("cache.jsonl"));
  const CompletionRequest req = request("replayable");
  CompletionResult result;
  result.raw_text = "stored";
  store->put(cache_key("openai", req), "openai", req, result);

  ReplayProvider replay(store, "openai");
  CompletionResult hit = replay.complete(req);
  CHECK(hit.raw_text == "stored");
  CHECK(hit.from_cache);

  try {
    replay.complete(request("never seen"));
    FAIL("expected cache-miss error");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderErrorKind::cache_miss);
  }
}
