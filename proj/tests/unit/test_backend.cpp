#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "scriptbench/backend.hpp"
#include "scriptbench/error.hpp"
#include "scriptbench/genclient.hpp"
#include "scriptbench/judge.hpp"
#include "scriptbench/text.hpp"

using namespace scriptbench;
using namespace scriptbench::backend;
using nlohmann::json;

namespace {

// Local chat-completions stand-in. The reply is chosen by the user message.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        last_body_ = json::parse(req.body);
        last_auth_ = req.get_header_value("Authorization");
      }
      const std::string user = last_body_["messages"][1]["content"];
      if (user == "timeout") {
        res.status = 524;
        res.set_content("gateway timeout", "text/plain");
      } else if (user == "blocked") {
        res.status = 400;
        res.set_content("{\"error\": \"content policy\"}", "application/json");
      } else if (user == "overload") {
        res.status = 503;
      } else if (user == "shape") {
        res.set_content("{\"id\": 1}", "application/json");
      } else if (user == "slow") {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(reply("late"), "application/json");
      } else {
        res.set_content(reply("echo:" + user), "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  json last_body() {
    std::lock_guard lock(mutex_);
    return last_body_;
  }
  std::string last_auth() {
    std::lock_guard lock(mutex_);
    return last_auth_;
  }

 private:
  static std::string reply(const std::string& content) {
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}
        .dump();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  json last_body_;
  std::string last_auth_;
};

ChatRequest request_for(const std::string& user) {
  ChatRequest r;
  r.system = "sys";
  r.user = user;
  r.temperature = 0.7;
  r.max_output_tokens = 321;
  r.seed = 99;
  return r;
}

}  // namespace

TEST_SUITE("backend") {
  TEST_CASE("http backend against a local server") {
    FakeServer server;
    ::setenv("SCRIPTBENCH_TEST_KEY", "sk-test", 1);
    HttpBackendOptions o;
    o.base_url = server.url();
    o.model = "model-x";
    o.api_key_env = "SCRIPTBENCH_TEST_KEY";
    o.timeout_seconds = 0.3;
    HttpChatBackend be(o);

    auto ok = be.complete(request_for("hello"));
    CHECK(ok.ok());
    CHECK(ok.status == 200);
    CHECK(ok.text == "echo:hello");
    const json body = server.last_body();
    CHECK(body["model"] == "model-x");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "sys");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["temperature"] == 0.7);
    CHECK(body["max_tokens"] == 321);
    CHECK_FALSE(body.contains("seed"));
    CHECK(server.last_auth() == "Bearer sk-test");

    auto t = be.complete(request_for("timeout"));
    CHECK(t.status == 524);
    CHECK(t.failure == Failure::Timeout);

    auto m = be.complete(request_for("blocked"));
    CHECK(m.status == 400);
    CHECK(m.failure == Failure::Moderation);

    auto o5 = be.complete(request_for("overload"));
    CHECK(o5.status == 503);
    CHECK(o5.failure == Failure::Other);

    auto sh = be.complete(request_for("shape"));
    CHECK(sh.failure == Failure::Other);
    CHECK(sh.error.find("unexpected response shape") != std::string::npos);

    auto slow = be.complete(request_for("slow"));
    CHECK(slow.status == 0);
    CHECK(slow.failure == Failure::Timeout);
  }

  TEST_CASE("http backend options") {
    FakeServer server;
    HttpBackendOptions o;
    o.base_url = server.url();
    o.model = "m";
    o.send_seed = true;
    HttpChatBackend be(o);
    CHECK(be.request_body(request_for("x"))["seed"] == 99);
    CHECK(be.complete(request_for("x")).ok());
    CHECK(server.last_auth().empty());

    o.api_key_env = "SCRIPTBENCH_TEST_UNSET_KEY";
    ::unsetenv("SCRIPTBENCH_TEST_UNSET_KEY");
    auto missing = HttpChatBackend(o).complete(request_for("x"));
    CHECK(missing.status == 0);
    CHECK(missing.failure == Failure::Other);
    CHECK(missing.error.find("SCRIPTBENCH_TEST_UNSET_KEY") != std::string::npos);

    HttpBackendOptions refused;
    refused.base_url = "http://127.0.0.1:1";
    refused.model = "m";
    refused.timeout_seconds = 1;
    auto r = HttpChatBackend(refused).complete(request_for("x"));
    CHECK(r.status == 0);
    CHECK_FALSE(r.ok());

    CHECK_THROWS_AS(HttpChatBackend(HttpBackendOptions{}), ConfigError);
  }

  TEST_CASE("mock generator is deterministic and answers in the envelope") {
    MockGeneratorOptions o;
    o.chunk_chars = 300;
    MockGeneratorBackend be("gen", o);
    genclient::GenerationConfig c;
    const std::string upper = "Scene 1\nMAYA: one.\nELIAS: two.\n\xE2\x96\xB2 Rain.\n";
    auto prompts = genclient::build_prompts(upper, "contract", c);
    auto req = genclient::build_chunk_request(prompts, "", 100, 500, c);
    req.seed = 4;
    auto a = be.complete(req);
    auto b = be.complete(req);
    CHECK(a.text == b.text);
    auto chunk = genclient::parse_envelope(a.text);
    REQUIRE(chunk.has_value());
    CHECK(text::char_count(*chunk) <= 300);
    CHECK(text::char_count(*chunk) > 200);
    for (auto line : text::split_lines(*chunk)) {
      CHECK(upper.find(std::string(line)) != std::string::npos);
    }
  }

  TEST_CASE("mock generator failure rates") {
    MockGeneratorOptions o;
    o.timeout_rate = 1.0;
    MockGeneratorBackend t("t", o);
    CHECK(t.complete(request_for("x")).status == 524);
    o.timeout_rate = 0.0;
    o.moderation_rate = 1.0;
    MockGeneratorBackend m("m", o);
    CHECK(m.complete(request_for("x")).status == 400);
  }

  TEST_CASE("mock judge replies parse as verdicts") {
    MockJudgeOptions o;
    o.prose_replies = 1;
    MockJudgeBackend be("judge", o);
    format::FormatProfile p;
    auto prompt = judge::build_judge_prompt("reference text here", "generated text here", p);
    ChatRequest req;
    req.system = prompt.system;
    req.user = prompt.user;
    auto first = be.complete(req);
    CHECK_THROWS_AS(judge::parse_verdict(first.text), VerdictError);
    auto second = be.complete(req);
    auto v = judge::parse_verdict(second.text);
    CHECK(v.scores.overall_similarity_0_100 >= 0);
    CHECK(v.scores.overall_similarity_0_100 <= 100);
    CHECK(be.complete(req).text == second.text);
  }

  TEST_CASE("rate limiter spaces calls") {
    auto inner = std::make_shared<FunctionBackend>(
        [](const ChatRequest&, std::size_t) { return ChatResponse{"ok", 200, Failure::None, ""}; });
    RateLimitedBackend limited(inner, 50.0);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 6; ++i) limited.complete(ChatRequest{});
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed >= std::chrono::milliseconds(95));
    CHECK(inner->requests().size() == 6);
  }

  TEST_CASE("backend registry") {
    CHECK(make_backend("a", {{"type", "mock"}})->name() == "a");
    CHECK(make_backend("j", {{"type", "mock_judge"}})->name() == "j");
    CHECK(make_backend("h", {{"type", "http"}, {"base_url", "http://x"}, {"model", "gpt"}})->name() ==
          "gpt");
    CHECK_THROWS_AS(make_backend("z", {{"type", "carrier-pigeon"}}), ConfigError);
    CHECK_THROWS_AS(make_backend("h", {{"type", "http"}}), ConfigError);
  }
}
