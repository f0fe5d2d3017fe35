#include <doctest.h>

#include <atomic>
#include <random>

#include "scriptbench/error.hpp"
#include "scriptbench/genclient.hpp"
#include "scriptbench/text.hpp"

using namespace scriptbench;
using namespace scriptbench::genclient;
using backend::ChatRequest;
using backend::ChatResponse;
using backend::Failure;
using backend::FunctionBackend;

namespace {

std::string envelope(const std::string& s) { return nlohmann::json{{"continuation", s}}.dump(); }

// Distinct CJK code points so context slices are unambiguous.
std::string body(std::size_t n, std::size_t offset = 0) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    text::append_utf8(out, static_cast<char32_t>(0x4E00 + (offset + i) % 5000));
  }
  return out;
}

std::string upper_of(std::size_t n) { return std::string(n, 'u'); }

// Backend returning `per_call` chars each time and remembering what it sent.
struct FixedChunks {
  std::size_t per_call;
  std::vector<std::string> sent;
  std::size_t offset = 0;

  FunctionBackend make() {
    return FunctionBackend([this](const ChatRequest&, std::size_t) {
      std::string c = body(per_call, offset);
      offset += per_call;
      sent.push_back(c);
      return ChatResponse{envelope(c), 200, Failure::None, ""};
    });
  }
};

GenerationSample sample_with(const std::string& text, std::vector<ChunkTrace> trace = {}) {
  GenerationSample s;
  s.text = text;
  s.chunk_trace = std::move(trace);
  return s;
}

ChunkTrace trace_of(const std::string& outcome, int status) {
  ChunkTrace t;
  t.outcome = outcome;
  t.status = status;
  return t;
}

}  // namespace

TEST_SUITE("genclient") {
  TEST_CASE("config invariants") {
    GenerationConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.min_ratio = 0.9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.max_ratio = 1.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.chunk_min_chars = 7000;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.max_calls = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    nlohmann::json j = c;
    CHECK(j.get<GenerationConfig>().chunk_max_chars == 6500);
  }

  TEST_CASE("target_range") {
    GenerationConfig c;
    auto r = target_range(19835, c);
    CHECK(r.min_len == 11901);
    CHECK(r.max_len == 17851);
    CHECK(target_range(10, c).min_len == 6);
    CHECK(target_range(10, c).max_len == 9);
    CHECK(target_range(1, c).degenerate());
    CHECK(target_range(20000, c).min_len == 12000);
    CHECK_THROWS_AS(target_range(0, c), InputError);
    CHECK_THROWS_AS(target_range(-5, c), InputError);
  }

  TEST_CASE("prompts") {
    GenerationConfig c;
    const std::string contract = "- Scenes: **1** | `code` <tag> & \"quotes\"";
    auto p = build_prompts("Part one text.", contract, c);
    CHECK(p.system == kSystemPrompt);
    CHECK(p.user.find(contract) != std::string::npos);
    CHECK(p.user.find("60%-90%") != std::string::npos);
    CHECK(p.user.find("Part one text.") != std::string::npos);
    CHECK(p.user.find(kPartIBegin) != std::string::npos);
    for (const char* c5 : {"Format hard constraint", "Continuity hard constraint",
                           "Narrative hard constraint", "Boundary hard constraint",
                           "Length constraint"}) {
      CHECK(p.user.find(c5) != std::string::npos);
    }
    auto q = build_prompts("Part one text.", contract, c);
    CHECK(p.user == q.user);
    CHECK(p.system == q.system);

    GenerationConfig other = c;
    other.min_ratio = 0.5;
    other.max_ratio = 0.8;
    CHECK(build_prompts("x", "y", other).user.find("50%-80%") != std::string::npos);
  }

  TEST_CASE("envelope parsing") {
    CHECK(parse_envelope(R"({"continuation": "abc"})") == "abc");
    CHECK(parse_envelope("Sure!\n```json\n{\"continuation\": \"x\"}\n```") == "x");
    CHECK_FALSE(parse_envelope("plain prose").has_value());
    CHECK_FALSE(parse_envelope(R"({"text": "abc"})").has_value());
    CHECK_FALSE(parse_envelope(R"({"continuation": 3})").has_value());
  }

  TEST_CASE("4000-char chunks at L_up 20000 stop after exactly 3 calls") {
    FixedChunks fx{4000, {}};
    auto be = fx.make();
    auto s = continue_script(upper_of(20000), "contract", be, GenerationConfig{});
    CHECK(s.chunk_trace.size() == 3);
    CHECK(be.requests().size() == 3);
    CHECK(text::char_count(s.text) == 12000);
    CHECK(s.validity == Validity::Valid);
  }

  TEST_CASE("500-char chunks exhaust max_calls") {
    FixedChunks fx{500, {}};
    auto be = fx.make();
    auto s = continue_script(upper_of(100000), "contract", be, GenerationConfig{});
    CHECK(s.chunk_trace.size() == 10);
    CHECK(s.validity == Validity::TooShort);
    CHECK(text::char_count(s.text) == 5000);
  }

  TEST_CASE("loop invariants over random chunk sizes") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
      GenerationConfig c;
      c.max_calls = 1 + static_cast<int>(rng() % 10);
      const std::size_t l_up = 2000 + rng() % 40000;
      std::vector<std::string> sent;
      std::size_t offset = 0;
      FunctionBackend be([&](const ChatRequest& req, std::size_t) {
        const std::size_t n = 100 + rng() % (req.max_chars + 1500);
        std::string chunk = body(n, offset);
        offset += n;
        sent.push_back(chunk);
        return ChatResponse{envelope(chunk), 200, Failure::None, ""};
      });
      auto s = continue_script(upper_of(l_up), "c", be, c);
      const auto reqs = be.requests();
      CHECK(reqs.size() <= static_cast<std::size_t>(c.max_calls));
      CHECK(s.chunk_trace.size() == reqs.size());

      std::string acc;
      for (std::size_t i = 0; i < reqs.size(); ++i) {
        CHECK(text::char_count(reqs[i].context) <= c.tail_context_chars);
        CHECK(reqs[i].context == std::string(text::tail_chars(acc, c.tail_context_chars)));
        CHECK(reqs[i].max_chars <= c.chunk_max_chars);
        CHECK(reqs[i].min_chars <= reqs[i].max_chars);
        acc += sent[i];
      }
      CHECK(acc == s.text);
      const auto range = target_range(static_cast<long long>(l_up), c);
      if (s.validity == Validity::Valid) {
        CHECK(text::char_count(s.text) >= range.min_len);
        CHECK(text::char_count(s.text) <= range.max_len);
      }
    }
  }

  TEST_CASE("final request is clamped to the remaining budget") {
    FixedChunks fx{6000, {}};
    auto be = fx.make();
    GenerationConfig c;
    continue_script(upper_of(10000), "c", be, c);  // range 6000..9000
    const auto reqs = be.requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].max_chars == 6500);
    FixedChunks fx2{3000, {}};
    auto be2 = fx2.make();
    continue_script(upper_of(10000), "c", be2, c);
    const auto reqs2 = be2.requests();
    REQUIRE(reqs2.size() == 2);
    CHECK(reqs2[1].max_chars == 6000);
  }

  TEST_CASE("backend failures map onto the taxonomy") {
    auto failing = [](int status, Failure f) {
      return FunctionBackend([=](const ChatRequest&, std::size_t) {
        return ChatResponse{"", status, f, "boom"};
      });
    };
    auto t = failing(524, Failure::Timeout);
    auto s = continue_script(upper_of(20000), "c", t, GenerationConfig{});
    CHECK(s.validity == Validity::ApiTimeout);
    CHECK(s.text.empty());
    REQUIRE(s.chunk_trace.size() == 1);
    CHECK(s.chunk_trace[0].status == 524);

    auto m = failing(400, Failure::Moderation);
    CHECK(continue_script(upper_of(20000), "c", m, GenerationConfig{}).validity ==
          Validity::ApiModeration);
    auto o = failing(500, Failure::Other);
    CHECK(continue_script(upper_of(20000), "c", o, GenerationConfig{}).validity ==
          Validity::ApiOther);

    FunctionBackend prose([](const ChatRequest&, std::size_t) {
      return ChatResponse{"I cannot do JSON today.", 200, Failure::None, ""};
    });
    CHECK(continue_script(upper_of(20000), "c", prose, GenerationConfig{}).validity ==
          Validity::ParseFailure);

    // partial text survives a later failure
    FunctionBackend partial([](const ChatRequest&, std::size_t i) {
      if (i == 0) return ChatResponse{envelope(body(4000)), 200, Failure::None, ""};
      return ChatResponse{"", 524, Failure::Timeout, "gateway"};
    });
    auto ps = continue_script(upper_of(20000), "c", partial, GenerationConfig{});
    CHECK(ps.validity == Validity::ApiTimeout);
    CHECK(text::char_count(ps.text) == 4000);
  }

  TEST_CASE("timeout retries are opt-in") {
    auto flaky = [] {
      return FunctionBackend([](const ChatRequest&, std::size_t i) {
        if (i == 0) return ChatResponse{"", 524, Failure::Timeout, ""};
        return ChatResponse{envelope(body(4000, i * 4000)), 200, Failure::None, ""};
      });
    };
    auto a = flaky();
    CHECK(continue_script(upper_of(20000), "c", a, GenerationConfig{}).validity ==
          Validity::ApiTimeout);
    GenerationConfig c;
    c.timeout_retries = 1;
    auto b = flaky();
    auto s = continue_script(upper_of(20000), "c", b, c);
    CHECK(s.validity == Validity::Valid);
    CHECK(s.chunk_trace.front().outcome == "retried");
  }

  TEST_CASE("classify_validity order and boundaries") {
    GenerationConfig c;
    const auto bl = default_blacklist();
    const std::size_t l_up = 1000;
    CHECK(classify_validity(sample_with(body(590)), l_up, c, bl) == Validity::TooShort);
    CHECK(classify_validity(sample_with(body(600)), l_up, c, bl) == Validity::Valid);
    CHECK(classify_validity(sample_with(body(750)), l_up, c, bl) == Validity::Valid);
    CHECK(classify_validity(sample_with(body(900)), l_up, c, bl) == Validity::Valid);
    CHECK(classify_validity(sample_with(body(901)), l_up, c, bl) == Validity::TooLong);

    const std::string meta = "Here is the continuation:\n" + body(700);
    CHECK(classify_validity(sample_with(meta), l_up, c, bl) == Validity::MetaDiscourse);
    CHECK(classify_validity(sample_with("HERE IS THE CONTINUATION" + body(700)), l_up, c, bl) ==
          Validity::MetaDiscourse);
    CHECK(classify_validity(sample_with(body(700) + "I hope this helps"), l_up, c, bl) ==
          Validity::MetaDiscourse);
    // only the first and last 200 chars are scanned
    CHECK(classify_validity(sample_with(body(300) + "let me know if" + body(300, 9)), l_up, c, bl) ==
          Validity::Valid);

    // API errors win over everything, regardless of text
    CHECK(classify_validity(sample_with(body(750), {trace_of("timeout", 524)}), l_up, c, bl) ==
          Validity::ApiTimeout);
    CHECK(classify_validity(sample_with(meta, {trace_of("moderation", 400)}), l_up, c, bl) ==
          Validity::ApiModeration);
    CHECK(classify_validity(sample_with(body(10), {trace_of("parse_error", 200)}), l_up, c, bl) ==
          Validity::ParseFailure);
    CHECK(classify_validity(sample_with(meta, {trace_of("parse_error", 200)}), l_up, c, bl) ==
          Validity::ParseFailure);
  }

  TEST_CASE("status classification") {
    CHECK(backend::classify_status(200) == Failure::None);
    CHECK(backend::classify_status(524) == Failure::Timeout);
    CHECK(backend::classify_status(504) == Failure::Timeout);
    CHECK(backend::classify_status(408) == Failure::Timeout);
    CHECK(backend::classify_status(400) == Failure::Moderation);
    CHECK(backend::classify_status(500) == Failure::Other);
    CHECK(backend::classify_status(429) == Failure::Other);
  }

  TEST_CASE("validity rate") {
    auto make = [](std::size_t valid, std::size_t invalid) {
      std::vector<GenerationSample> v(valid + invalid);
      for (std::size_t i = valid; i < v.size(); ++i) v[i].validity = Validity::TooShort;
      return v;
    };
    CHECK(format_rate(validity_rate(make(157, 2), 159)) == "98.7%");
    CHECK(format_rate(validity_rate(make(146, 13), 159)) == "91.8%");
    CHECK(format_rate(validity_rate(make(0, 10), 10)) == "0.0%");
    CHECK_THROWS_AS(validity_rate(make(1, 0), 0), InputError);
    CHECK_THROWS_AS(validity_rate(make(5, 0), 4), InputError);
  }

  TEST_CASE("sample JSON round-trip and wire names") {
    for (auto v : {Validity::Valid, Validity::TooShort, Validity::TooLong, Validity::MetaDiscourse,
                   Validity::ParseFailure, Validity::ApiTimeout, Validity::ApiModeration,
                   Validity::ApiOther}) {
      CHECK(validity_from_string(to_string(v)) == v);
    }
    CHECK(to_string(Validity::MetaDiscourse) == "META_DISCOURSE");
    CHECK(to_string(Validity::ApiTimeout) == "API_TIMEOUT");
    FixedChunks fx{4000, {}};
    auto be = fx.make();
    auto s = continue_script(upper_of(20000), "c", be, GenerationConfig{}, {"m", "f", 2});
    nlohmann::json j = s;
    CHECK(j.get<GenerationSample>() == s);
  }

  TEST_CASE("parallel_for visits every index and rethrows") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(50, 4,
                                 [](std::size_t i) {
                                   if (i == 17) throw InputError("x");
                                 }),
                    InputError);
  }

  TEST_CASE("blacklist file") {
    const auto path = std::filesystem::path(SCRIPTBENCH_SOURCE_DIR) / "data" / "blacklist.txt";
    const auto bl = load_blacklist(path.string());
    CHECK(std::find(bl.begin(), bl.end(), "here is the continuation") != bl.end());
    for (const auto& p : bl) CHECK(p == text::ascii_lower(p));
    CHECK_THROWS_AS(load_blacklist("/nonexistent/blacklist.txt"), IoError);
  }
}
