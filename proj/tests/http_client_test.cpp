#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "lexchain/openai_client.hpp"

#include <doctest.h>

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

#include "lexchain/errors.hpp"

using namespace lexchain;
using nlohmann::json;

namespace {

// Local OpenAI-shaped endpoint capturing every request body.
class FakeEndpoint {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit FakeEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(req.body);
        auth_headers_.push_back(req.get_header_value("Authorization"));
      }
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<std::string> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mutex_);
    return auth_headers_;
  }
  size_t hits() const {
    std::lock_guard lock(mutex_);
    return bodies_.size();
  }

 private:
  httplib::Server server_;
  Handler handler_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_headers_;
};

std::string ok_body(const std::string& content, const std::string& finish = "stop") {
  json j;
  j["choices"] = json::array({json{{"message", {{"role", "assistant"}, {"content", content}}},
                                   {"finish_reason", finish},
                                   {"index", 0}}});
  j["usage"] = {{"prompt_tokens", 12}, {"completion_tokens", 3}, {"total_tokens", 15}};
  return j.dump();
}

OpenAiClientOptions options_for(const FakeEndpoint& endpoint,
                                std::vector<std::chrono::milliseconds>* delays = nullptr) {
  OpenAiClientOptions o;
  o.base_url = endpoint.base_url();
  o.api_key = "test-key";
  o.max_attempts = 3;
  o.backoff_base = std::chrono::milliseconds(1000);
  o.backoff_cap = std::chrono::milliseconds(30000);
  o.timeout = std::chrono::milliseconds(5000);
  o.sleep_fn = [delays](std::chrono::milliseconds d) {
    if (delays != nullptr) {
      delays->push_back(d);
    }
  };
  return o;
}

CompletionRequest request(const std::string& prompt) {
  CompletionRequest r;
  r.model_id = "gpt-test";
  r.prompt_text = prompt;
  r.temperature = 0.0;
  r.template_version = 1;
  return r;
}

}  // namespace

TEST_CASE("wire payload is a single user message with no conversation state") {
  FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_body("[{\"bucket\":\"a\"}]"), "application/json");
  });
  OpenAiClient client(options_for(endpoint));

  CompletionResult first = client.complete(request("PROMPT-ONE"));
  CHECK(first.raw_text == "[{\"bucket\":\"a\"}]");
  CHECK(first.finish_reason == FinishReason::complete);
  REQUIRE(first.usage.has_value());
  CHECK(first.usage->total_tokens == 15);

  client.complete(request("PROMPT-TWO"));

  auto bodies = endpoint.bodies();
  REQUIRE(bodies.size() == 2);
  for (const auto& raw : bodies) {
    json body = json::parse(raw);
    CHECK(body.at("model") == "gpt-test");
    CHECK(body.at("temperature") == 0.0);
    REQUIRE(body.at("messages").size() == 1);  // exactly one message, no history
    CHECK(body.at("messages")[0].at("role") == "user");
    CHECK_FALSE(body.contains("max_tokens"));
  }
  // Statelessness: the second payload carries nothing from the first call.
  CHECK(json::parse(bodies[1]).at("messages")[0].at("content") == "PROMPT-TWO");
  CHECK(bodies[1].find("PROMPT-ONE") == std::string::npos);

  for (const auto& auth : endpoint.auth_headers()) {
    CHECK(auth == "Bearer test-key");
  }
}

TEST_CASE("max_output_tokens maps to max_tokens when set") {
  FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_body("x"), "application/json");
  });
  OpenAiClient client(options_for(endpoint));
  CompletionRequest r = request("p");
  r.max_output_tokens = 77;
  client.complete(r);
  json body = json::parse(endpoint.bodies().at(0));
  CHECK(body.at("max_tokens") == 77);
}

TEST_CASE("transient server errors are retried with exponential backoff") {
  std::atomic<int> calls{0};
  FakeEndpoint endpoint([&calls](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) < 2) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    } else {
      res.set_content(ok_body("recovered"), "application/json");
    }
  });
  std::vector<std::chrono::milliseconds> delays;
  OpenAiClient client(options_for(endpoint, &delays));

  CompletionResult result = client.complete(request("p"));
  CHECK(result.raw_text == "recovered");
  CHECK(endpoint.hits() == 3);
  REQUIRE(delays.size() == 2);
  CHECK(delays[0] == std::chrono::milliseconds(1000));
  CHECK(delays[1] == std::chrono::milliseconds(2000));
}

TEST_CASE("rate limiting retries then fails with the rate-limit class") {
  FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
    res.status = 429;
    res.set_content("slow down", "text/plain");
  });
  std::vector<std::chrono::milliseconds> delays;
  OpenAiClient client(options_for(endpoint, &delays));

  try {
    client.complete(request("p"));
    FAIL("expected rate-limit failure");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderErrorKind::rate_limited);
  }
  CHECK(endpoint.hits() == 3);  // bounded retries
  CHECK(delays.size() == 2);
}

TEST_CASE("backoff delays are capped") {
  FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  std::vector<std::chrono::milliseconds> delays;
  OpenAiClientOptions o = options_for(endpoint, &delays);
  o.max_attempts = 4;
  o.backoff_base = std::chrono::milliseconds(20000);
  o.backoff_cap = std::chrono::milliseconds(30000);
  OpenAiClient client(std::move(o));

  CHECK_THROWS_AS(client.complete(request("p")), ProviderError);
  REQUIRE(delays.size() == 3);
  CHECK(delays[0] == std::chrono::milliseconds(20000));
  CHECK(delays[1] == std::chrono::milliseconds(30000));  // 40000 capped
  CHECK(delays[2] == std::chrono::milliseconds(30000));  // 80000 capped
}

TEST_CASE("authentication failures are never retried") {
  FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("{\"error\": {\"message\": \"bad key\"}}", "application/json");
  });
  std::vector<std::chrono::milliseconds> delays;
  OpenAiClient client(options_for(endpoint, &delays));

  try {
    client.complete(request("p"));
    FAIL("expected auth failure");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderErrorKind::authentication);
  }
  CHECK(endpoint.hits() == 1);
  CHECK(delays.empty());
}

TEST_CASE("malformed response bodies fail without retry") {
  FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
    res.set_content("this is not json", "application/json");
  });
  OpenAiClient client(options_for(endpoint));
  try {
    client.complete(request("p"));
    FAIL("expected malformed-response failure");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderErrorKind::malformed_response);
  }
  CHECK(endpoint.hits() == 1);
}

TEST_CASE("finish reasons map from the wire protocol") {
  FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_body("cut off mid", "length"), "application/json");
  });
  OpenAiClient client(options_for(endpoint));
  CompletionResult result = client.complete(request("p"));
  CHECK(result.finish_reason == FinishReason::truncated);
}

TEST_CASE("unreachable endpoints raise a network error after retries") {
  std::vector<std::chrono::milliseconds> delays;
  OpenAiClientOptions o;
  o.base_url = "http://127.0.0.1:1";  // nothing listens on port 1
  o.api_key = "k";
  o.max_attempts = 3;
  o.timeout = std::chrono::milliseconds(200);
  o.sleep_fn = [&delays](std::chrono::milliseconds d) { delays.push_back(d); };
  OpenAiClient client(std::move(o));
  try {
    client.complete(request("p"));
    FAIL("expected network failure");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderErrorKind::network);
  }
  CHECK(delays.size() == 2);
}

TEST_CASE("client construction validates configuration") {
  OpenAiClientOptions no_key;
  no_key.base_url = "http://127.0.0.1:9";
  CHECK_THROWS_AS(OpenAiClient{no_key}, ConfigError);
  OpenAiClientOptions no_url;
  no_url.api_key = "k";
  CHECK_THROWS_AS(OpenAiClient{no_url}, ConfigError);
}
