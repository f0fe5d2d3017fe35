#include <httplib.h>

#include "scriptbench/backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "scriptbench/error.hpp"
#include "scriptbench/genclient.hpp"
#include "scriptbench/text.hpp"

namespace scriptbench::backend {

using nlohmann::json;

Failure classify_status(int status) {
  if (status >= 200 && status < 300) return Failure::None;
  if (status == 524 || status == 504 || status == 408) return Failure::Timeout;
  if (status == 400) return Failure::Moderation;
  return Failure::Other;
}

// ---------------------------------------------------------------------------

FunctionBackend::FunctionBackend(Handler handler, std::string name)
    : handler_(std::move(handler)), name_(std::move(name)) {}

ChatResponse FunctionBackend::complete(const ChatRequest& request) {
  std::size_t index;
  {
    std::lock_guard lock(mutex_);
    index = requests_.size();
    requests_.push_back(request);
  }
  return handler_(request, index);
}

std::vector<ChatRequest> FunctionBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw ConfigError("http backend: base_url is required");
  if (options_.model.empty()) throw ConfigError("http backend: model is required");
}

json HttpChatBackend::request_body(const ChatRequest& request) const {
  json body{{"model", options_.model},
            {"messages",
             json::array({{{"role", "system"}, {"content", request.system}},
                          {{"role", "user"}, {"content", request.user}}})},
            {"temperature", request.temperature},
            {"max_tokens", request.max_output_tokens}};
  if (options_.send_seed && request.seed) body["seed"] = *request.seed;
  return body;
}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  httplib::Client client(options_.base_url);
  const auto secs = static_cast<time_t>(options_.timeout_seconds);
  const auto usecs = static_cast<time_t>((options_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!options_.api_key_env.empty()) {
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (!key || !*key) {
      return ChatResponse{"", 0, Failure::Other,
                          "environment variable " + options_.api_key_env + " is not set"};
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(options_.path, headers, request_body(request).dump(), "application/json");
  ChatResponse out;
  if (!res) {
    const auto err = res.error();
    out.status = 0;
    out.failure = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                      ? Failure::Timeout
                      : Failure::Other;
    out.error = httplib::to_string(err);
    return out;
  }
  out.status = res->status;
  out.failure = classify_status(res->status);
  if (!out.ok()) {
    out.error = res->body.substr(0, 500);
    return out;
  }
  json parsed = json::parse(res->body, nullptr, false);
  try {
    if (parsed.is_discarded()) throw std::runtime_error("response is not JSON");
    out.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    out.failure = Failure::Other;
    out.error = std::string("unexpected response shape: ") + e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mock generator

namespace {

std::string between(std::string_view s, std::string_view begin, std::string_view end) {
  const auto b = s.find(begin);
  if (b == std::string_view::npos) return {};
  const auto start = b + begin.size();
  const auto e = s.find(end, start);
  if (e == std::string_view::npos) return {};
  std::string_view body = s.substr(start, e - start);
  if (!body.empty() && body.front() == '\n') body.remove_prefix(1);
  return std::string(body);
}

double unit(std::uint64_t h) { return static_cast<double>(h % 1000000) / 1e6; }

// Breaks the line's format convention the way a drifting model would.
std::string drift_line(std::string_view line) {
  const std::u32string u = text::decode(line);
  for (std::size_t i = 0; i < u.size() && i < 24; ++i) {
    if (u[i] == U':' || u[i] == 0xFF1A) {
      std::u32string out = u.substr(0, i);
      out += U'\n';
      out += text::trim(std::u32string_view(u).substr(i + 1));
      return text::encode(out);
    }
  }
  if (!u.empty() && (u[0] == U'(' || u[0] == 0xFF08 || u[0] == 0x0394 || u[0] == 0x25B2)) {
    std::u32string out = u.substr(1);
    if (!out.empty() && (out.back() == U')' || out.back() == 0xFF09)) out.pop_back();
    return text::encode(text::trim(out));
  }
  return std::string(line);
}

}  // namespace

MockGeneratorBackend::MockGeneratorBackend(std::string name, MockGeneratorOptions options)
    : name_(std::move(name)), options_(std::move(options)) {}

ChatResponse MockGeneratorBackend::complete(const ChatRequest& request) {
  const std::uint64_t sample_seed =
      text::fnv1a64(options_.seed + "/" + std::to_string(request.seed.value_or(0)));
  const bool first_call = request.context.empty();
  if (first_call && unit(sample_seed) < options_.timeout_rate) {
    return ChatResponse{"", 524, Failure::Timeout, "mock gateway timeout"};
  }
  if (first_call && unit(sample_seed >> 20) < options_.moderation_rate) {
    return ChatResponse{"", 400, Failure::Moderation, "mock content moderation"};
  }

  const std::string part1 = between(request.user, genclient::kPartIBegin, genclient::kPartIEnd);
  std::vector<std::string_view> pool;
  for (auto line : text::split_lines(part1)) {
    if (!text::trim(line).empty()) pool.push_back(line);
  }
  if (pool.empty()) return ChatResponse{"{\"continuation\": \"\"}", 200, Failure::None, ""};

  std::mt19937_64 rng(text::fnv1a64(request.context, sample_seed));
  const std::size_t budget = std::min(options_.chunk_chars,
                                      request.max_chars ? request.max_chars : options_.chunk_chars);
  std::string out;
  if (first_call && unit(sample_seed >> 40) < options_.meta_rate) {
    out += "Here is the continuation:\n";
  }
  std::size_t chars = text::char_count(out);
  while (chars < budget) {
    std::string line(pool[rng() % pool.size()]);
    if (options_.drift > 0.0 && unit(rng()) < options_.drift) line = drift_line(line);
    line.push_back('\n');
    const std::size_t n = text::char_count(line);
    if (chars + n > budget) {
      if (chars == 0) out += std::string(text::head_chars(line, budget));
      break;
    }
    out += line;
    chars += n;
  }
  return ChatResponse{json{{"continuation", out}}.dump(), 200, Failure::None, ""};
}

// ---------------------------------------------------------------------------
// Mock judge

namespace {

double bigram_dice(std::string_view a, std::string_view b) {
  auto grams = [](std::string_view s) {
    std::vector<std::uint64_t> g;
    const std::u32string u = text::decode(s);
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
      if (text::is_space(u[i]) || text::is_space(u[i + 1])) continue;
      g.push_back((static_cast<std::uint64_t>(u[i]) << 32) | u[i + 1]);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  };
  const auto ga = grams(a);
  const auto gb = grams(b);
  if (ga.empty() || gb.empty()) return 0.0;
  std::vector<std::uint64_t> common;
  std::set_intersection(ga.begin(), ga.end(), gb.begin(), gb.end(), std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) / static_cast<double>(ga.size() + gb.size());
}

}  // namespace

MockJudgeBackend::MockJudgeBackend(std::string name, MockJudgeOptions options)
    : name_(std::move(name)), options_(std::move(options)) {}

ChatResponse MockJudgeBackend::complete(const ChatRequest& request) {
  const std::string reference = between(request.user, "<<<REFERENCE>>>", "<<<END REFERENCE>>>");
  const std::string generated = between(request.user, "<<<GENERATED>>>", "<<<END GENERATED>>>");
  const std::uint64_t h = text::fnv1a64(reference + "\x1f" + generated,
                                        text::fnv1a64(options_.seed));
  if (options_.prose_replies > 0) {
    std::lock_guard lock(mutex_);
    auto it = std::find_if(prose_counts_.begin(), prose_counts_.end(),
                           [&](const auto& p) { return p.first == h; });
    if (it == prose_counts_.end()) {
      prose_counts_.emplace_back(h, 0);
      it = std::prev(prose_counts_.end());
    }
    if (it->second < options_.prose_replies) {
      ++it->second;
      return ChatResponse{"The generated continuation broadly follows the reference.", 200,
                          Failure::None, ""};
    }
  }

  const double dice = bigram_dice(reference, generated);
  std::mt19937_64 rng(h);
  auto jitter = [&](int span) { return static_cast<int>(rng() % (2 * span + 1)) - span; };
  auto clamp = [](int v) { return std::clamp(v, 0, 100); };
  const int overall = clamp(static_cast<int>(std::lround(15.0 + 70.0 * dice)) + jitter(6));
  json verdict{
      {"overall_similarity_0_100", overall},
      {"plot_event_alignment", clamp(overall - 12 + jitter(8))},
      {"character_consistency", clamp(overall + jitter(8))},
      {"tone_style_match", clamp(overall + 8 + jitter(8))},
      {"format_match", clamp(overall + 25 + jitter(8))},
      {"ending_closure", clamp(overall / 3 + jitter(5))},
      {"diff_evidence",
       json::array({{{"reference_quote", std::string(text::head_chars(reference, 40))},
                     {"generated_quote", std::string(text::head_chars(generated, 40))},
                     {"note", "opening beats compared"}}})},
      {"mechanism_attribution",
       {{"problem_definition", "continuation re-frames the central conflict"},
        {"causal_interpretation", "events are attributed to the same characters' choices"},
        {"moral_evaluation", "tone of judgement stays close to the original"},
        {"treatment_recommendation", "resolve the open threads set up in Part I"}}}};
  return ChatResponse{"```json\n" + verdict.dump(2) + "\n```\n", 200, Failure::None, ""};
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double per_second)
    : interval_(per_second > 0.0 ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                       std::chrono::duration<double>(1.0 / per_second))
                                 : std::chrono::steady_clock::duration::zero()),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (interval_ == std::chrono::steady_clock::duration::zero()) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

RateLimitedBackend::RateLimitedBackend(std::shared_ptr<ChatBackend> inner, double per_second)
    : inner_(std::move(inner)), limiter_(per_second) {}

ChatResponse RateLimitedBackend::complete(const ChatRequest& request) {
  limiter_.acquire();
  return inner_->complete(request);
}

// ---------------------------------------------------------------------------

std::shared_ptr<ChatBackend> make_backend(const std::string& name, const json& spec) {
  const std::string type = spec.value("type", "");
  if (type == "http" || type == "openai") {
    HttpBackendOptions o;
    o.base_url = spec.value("base_url", "");
    o.path = spec.value("path", o.path);
    o.model = spec.value("model", name);
    o.api_key_env = spec.value("api_key_env", "");
    o.timeout_seconds = spec.value("timeout_seconds", o.timeout_seconds);
    o.send_seed = spec.value("send_seed", false);
    return std::make_shared<HttpChatBackend>(std::move(o));
  }
  if (type == "mock") {
    MockGeneratorOptions o;
    o.seed = spec.value("seed", name);
    o.chunk_chars = spec.value("chunk_chars", o.chunk_chars);
    o.drift = spec.value("drift", 0.0);
    o.timeout_rate = spec.value("timeout_rate", 0.0);
    o.moderation_rate = spec.value("moderation_rate", 0.0);
    o.meta_rate = spec.value("meta_rate", 0.0);
    return std::make_shared<MockGeneratorBackend>(name, std::move(o));
  }
  if (type == "mock_judge") {
    MockJudgeOptions o;
    o.seed = spec.value("seed", name);
    o.prose_replies = spec.value("prose_replies", 0);
    return std::make_shared<MockJudgeBackend>(name, std::move(o));
  }
  throw ConfigError("backend '" + name + "': unknown type '" + type + "'");
}

}  // namespace scriptbench::backend
