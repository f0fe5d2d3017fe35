#include "scriptbench/genclient.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "scriptbench/error.hpp"
#include "scriptbench/jsonutil.hpp"
#include "scriptbench/text.hpp"

namespace scriptbench::genclient {

using nlohmann::json;

void GenerationConfig::validate() const {
  if (!(min_ratio > 0.0 && min_ratio < max_ratio && max_ratio <= 1.0)) {
    throw ConfigError("generation: need 0 < min_ratio < max_ratio <= 1");
  }
  if (chunk_min_chars == 0 || chunk_min_chars > chunk_max_chars) {
    throw ConfigError("generation: need 0 < chunk_min_chars <= chunk_max_chars");
  }
  if (max_calls < 1) throw ConfigError("generation: max_calls must be >= 1");
  if (samples_per_film < 1) throw ConfigError("generation: samples_per_film must be >= 1");
  if (!(chars_per_token > 0.0)) throw ConfigError("generation: chars_per_token must be > 0");
  if (timeout_retries < 0) throw ConfigError("generation: timeout_retries must be >= 0");
}

void to_json(json& j, const GenerationConfig& c) {
  j = json{{"min_ratio", c.min_ratio},
           {"max_ratio", c.max_ratio},
           {"chunk_min_chars", c.chunk_min_chars},
           {"chunk_max_chars", c.chunk_max_chars},
           {"tail_context_chars", c.tail_context_chars},
           {"max_calls", c.max_calls},
           {"temperature", c.temperature},
           {"samples_per_film", c.samples_per_film},
           {"chars_per_token", c.chars_per_token},
           {"timeout_retries", c.timeout_retries}};
}

void from_json(const json& j, GenerationConfig& c) {
  const GenerationConfig d;
  c.min_ratio = j.value("min_ratio", d.min_ratio);
  c.max_ratio = j.value("max_ratio", d.max_ratio);
  c.chunk_min_chars = j.value("chunk_min_chars", d.chunk_min_chars);
  c.chunk_max_chars = j.value("chunk_max_chars", d.chunk_max_chars);
  c.tail_context_chars = j.value("tail_context_chars", d.tail_context_chars);
  c.max_calls = j.value("max_calls", d.max_calls);
  c.temperature = j.value("temperature", d.temperature);
  c.samples_per_film = j.value("samples_per_film", d.samples_per_film);
  c.chars_per_token = j.value("chars_per_token", d.chars_per_token);
  c.timeout_retries = j.value("timeout_retries", d.timeout_retries);
}

std::string to_string(Validity v) {
  switch (v) {
    case Validity::Valid: return "VALID";
    case Validity::TooShort: return "TOO_SHORT";
    case Validity::TooLong: return "TOO_LONG";
    case Validity::MetaDiscourse: return "META_DISCOURSE";
    case Validity::ParseFailure: return "PARSE_FAILURE";
    case Validity::ApiTimeout: return "API_TIMEOUT";
    case Validity::ApiModeration: return "API_MODERATION";
    case Validity::ApiOther: return "API_OTHER";
  }
  return "API_OTHER";
}

Validity validity_from_string(std::string_view s) {
  for (Validity v : {Validity::Valid, Validity::TooShort, Validity::TooLong,
                     Validity::MetaDiscourse, Validity::ParseFailure, Validity::ApiTimeout,
                     Validity::ApiModeration, Validity::ApiOther}) {
    if (to_string(v) == s) return v;
  }
  throw InputError("unknown validity '" + std::string(s) + "'");
}

void to_json(json& j, const GenerationSample& s) {
  json trace = json::array();
  for (const auto& t : s.chunk_trace) {
    trace.push_back({{"call", t.call_index},
                     {"chars", t.chars_returned},
                     {"status", t.status},
                     {"outcome", t.outcome},
                     {"requested_min", t.requested_min},
                     {"requested_max", t.requested_max},
                     {"context_chars", t.context_chars}});
  }
  j = json{{"model_id", s.model_id},       {"film_id", s.film_id},
           {"sample_idx", s.sample_idx},   {"validity", to_string(s.validity)},
           {"upper_chars", s.upper_chars}, {"text_chars", text::char_count(s.text)},
           {"chunk_trace", trace},         {"text", s.text}};
}

void from_json(const json& j, GenerationSample& s) {
  s.model_id = j.at("model_id").get<std::string>();
  s.film_id = j.at("film_id").get<std::string>();
  s.sample_idx = j.at("sample_idx").get<int>();
  s.validity = validity_from_string(j.at("validity").get<std::string>());
  s.upper_chars = j.value("upper_chars", std::size_t{0});
  s.text = j.at("text").get<std::string>();
  s.chunk_trace.clear();
  for (const auto& t : j.value("chunk_trace", json::array())) {
    ChunkTrace c;
    c.call_index = t.at("call").get<int>();
    c.chars_returned = t.at("chars").get<std::size_t>();
    c.status = t.at("status").get<int>();
    c.outcome = t.at("outcome").get<std::string>();
    c.requested_min = t.value("requested_min", std::size_t{0});
    c.requested_max = t.value("requested_max", std::size_t{0});
    c.context_chars = t.value("context_chars", std::size_t{0});
    s.chunk_trace.push_back(c);
  }
}

// ---------------------------------------------------------------------------
// Prompts

const char* const kSystemPrompt =
    "You are a senior film screenwriter and script formatting editor. Your sole task is: "
    "strictly following the Format Contract of the input script \"Part I\", directly continue "
    "the subsequent plot \"Part II\". You must output JSON conforming to requirements and "
    "provide no additional explanation.";

const char* const kPartIBegin = "<<<PART I>>>";
const char* const kPartIEnd = "<<<END PART I>>>";
const char* const kContextBegin = "<<<PART II SO FAR>>>";
const char* const kContextEnd = "<<<END PART II SO FAR>>>";

namespace {

std::string percent(double ratio) {
  return std::to_string(static_cast<long long>(std::llround(ratio * 100.0))) + "%";
}

}  // namespace

Prompts build_prompts(std::string_view upper, std::string_view contract,
                      const GenerationConfig& config) {
  const std::size_t l_up = text::char_count(upper);
  const TargetRange range = target_range(static_cast<long long>(std::max<std::size_t>(l_up, 1)),
                                         config);
  std::ostringstream u;
  u << "## Format Contract\n" << contract;
  if (!contract.empty() && contract.back() != '\n') u << '\n';
  u << "\n## Part I\n" << kPartIBegin << '\n' << upper;
  if (!upper.empty() && upper.back() != '\n') u << '\n';
  u << kPartIEnd << "\n\n";
  u << "## Hard constraints\n"
    << "1. Format hard constraint: follow the Format Contract item by item.\n"
    << "2. Continuity hard constraint: continue the character settings, relationships and "
       "unresolved conflicts of Part I.\n"
    << "3. Narrative hard constraint: maintain the genre atmosphere and linguistic style.\n"
    << "4. Boundary hard constraint: no meta-discourse; output script text only, with no "
       "preface, summary or commentary.\n"
    << "5. Length constraint: the complete Part II must be " << percent(config.min_ratio) << "-"
    << percent(config.max_ratio) << " of the length of Part I (" << l_up
    << " characters), i.e. between " << range.min_len << " and " << range.max_len
    << " characters.\n\n";
  u << "## Output\nReturn exactly one JSON object of the form {\"continuation\": \"<Part II "
       "text>\"} and nothing else.\n";
  return Prompts{kSystemPrompt, u.str()};
}

TargetRange target_range(long long upper_chars, const GenerationConfig& config) {
  if (upper_chars <= 0) throw InputError("target_range: upper length must be positive");
  const double l = static_cast<double>(upper_chars);
  // The epsilon keeps exact products such as 0.6 * 19835 from flooring one low.
  const auto lo = static_cast<std::size_t>(std::floor(config.min_ratio * l + 1e-9));
  const auto hi = static_cast<std::size_t>(std::floor(config.max_ratio * l + 1e-9));
  return {lo, hi};
}

backend::ChatRequest build_chunk_request(const Prompts& base, std::string_view accumulated,
                                         std::size_t request_min, std::size_t request_max,
                                         const GenerationConfig& config) {
  backend::ChatRequest req;
  req.system = base.system;
  req.temperature = config.temperature;
  req.min_chars = request_min;
  req.max_chars = request_max;
  req.context = std::string(text::tail_chars(accumulated, config.tail_context_chars));
  req.max_output_tokens = static_cast<int>(
      std::ceil(static_cast<double>(request_max) / config.chars_per_token)) + 64;

  std::ostringstream u;
  u << base.user << '\n';
  if (accumulated.empty()) {
    u << "## This request\nWrite the opening segment of Part II, continuing directly from the "
         "end of Part I. This segment must be between "
      << request_min << " and " << request_max << " characters long.\n";
  } else {
    u << "## Part II so far (last " << text::char_count(req.context) << " characters)\n"
      << kContextBegin << '\n'
      << req.context;
    if (req.context.back() != '\n') u << '\n';
    u << kContextEnd << "\n\n"
      << "## This request\nWrite the next segment of Part II, continuing seamlessly from the "
         "text above without repeating it. This segment must be between "
      << request_min << " and " << request_max << " characters long.\n";
  }
  req.user = u.str();
  return req;
}

std::optional<std::string> parse_envelope(std::string_view response) {
  auto obj = jsonutil::extract_first_object(response);
  if (!obj) return std::nullopt;
  auto it = obj->find("continuation");
  if (it == obj->end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

// ---------------------------------------------------------------------------
// Loop

std::vector<std::string> default_blacklist() {
  return {"here is the continuation",
          "here's the continuation",
          "here is part ii",
          "here is the next part",
          "below is the continuation",
          "continuation of the script",
          "as an ai",
          "i hope this",
          "let me know if",
          "\xE4\xBB\xA5\xE4\xB8\x8B\xE6\x98\xAF\xE7\xBB\xAD\xE5\x86\x99",  // 以下是续写
          "\xE7\xBB\xAD\xE5\x86\x99\xE5\xA6\x82\xE4\xB8\x8B",              // 续写如下
          "\xE5\xB8\x8C\xE6\x9C\x9B\xE8\xBF\x99"};                          // 希望这
}

std::vector<std::string> load_blacklist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open blacklist " + path);
  std::vector<std::string> phrases;
  for (std::string line; std::getline(in, line);) {
    const std::string t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    phrases.push_back(text::ascii_lower(t));
  }
  return phrases;
}

namespace {

std::string outcome_for(backend::Failure f) {
  switch (f) {
    case backend::Failure::Timeout: return "timeout";
    case backend::Failure::Moderation: return "moderation";
    case backend::Failure::Other: return "api_error";
    case backend::Failure::None: return "ok";
  }
  return "api_error";
}

}  // namespace

GenerationSample continue_script(std::string_view upper, std::string_view contract,
                                 backend::ChatBackend& chat, const GenerationConfig& config,
                                 const SampleKey& key,
                                 const std::vector<std::string>& blacklist) {
  config.validate();
  GenerationSample sample;
  sample.model_id = key.model_id;
  sample.film_id = key.film_id;
  sample.sample_idx = key.sample_idx;
  sample.upper_chars = text::char_count(upper);

  const TargetRange range = target_range(static_cast<long long>(sample.upper_chars), config);
  const Prompts base = build_prompts(upper, contract, config);
  const std::uint64_t seed = text::fnv1a64(key.film_id + "#" + std::to_string(key.sample_idx));

  std::string accumulated;
  std::size_t acc_chars = 0;
  for (int call = 0; call < config.max_calls && acc_chars < range.min_len; ++call) {
    const std::size_t remaining = range.max_len - acc_chars;
    const std::size_t req_max = std::min(config.chunk_max_chars, remaining);
    const std::size_t req_min = std::min(config.chunk_min_chars, req_max);
    backend::ChatRequest req = build_chunk_request(base, accumulated, req_min, req_max, config);
    req.seed = seed;

    ChunkTrace entry;
    entry.call_index = call;
    entry.requested_min = req_min;
    entry.requested_max = req_max;
    entry.context_chars = text::char_count(req.context);

    backend::ChatResponse resp = chat.complete(req);
    for (int retry = 0; retry < config.timeout_retries &&
                        resp.failure == backend::Failure::Timeout;
         ++retry) {
      ChunkTrace retried = entry;
      retried.status = resp.status;
      retried.outcome = "retried";
      retried.chars_returned = 0;
      sample.chunk_trace.push_back(retried);
      resp = chat.complete(req);
    }
    entry.status = resp.status;
    if (!resp.ok()) {
      entry.outcome = outcome_for(resp.failure);
      sample.chunk_trace.push_back(entry);
      break;
    }
    auto chunk = parse_envelope(resp.text);
    if (!chunk) {
      entry.outcome = "parse_error";
      sample.chunk_trace.push_back(entry);
      break;
    }
    entry.chars_returned = text::char_count(*chunk);
    sample.chunk_trace.push_back(entry);
    accumulated += *chunk;
    acc_chars += entry.chars_returned;
  }
  sample.text = std::move(accumulated);
  sample.validity = classify_validity(sample, sample.upper_chars, config, blacklist);
  return sample;
}

Validity classify_validity(const GenerationSample& sample, std::size_t upper_chars,
                           const GenerationConfig& config,
                           const std::vector<std::string>& blacklist) {
  for (const auto& t : sample.chunk_trace) {
    if (t.outcome == "timeout") return Validity::ApiTimeout;
    if (t.outcome == "moderation") return Validity::ApiModeration;
    if (t.outcome == "api_error") return Validity::ApiOther;
  }
  for (const auto& t : sample.chunk_trace) {
    if (t.outcome == "parse_error") return Validity::ParseFailure;
  }
  const std::size_t len = text::char_count(sample.text);
  const TargetRange range =
      target_range(static_cast<long long>(std::max<std::size_t>(upper_chars, 1)), config);
  if (upper_chars == 0 || len < range.min_len) return Validity::TooShort;
  if (len > range.max_len) return Validity::TooLong;

  const std::string head = text::ascii_lower(text::head_chars(sample.text, 200));
  const std::string tail = text::ascii_lower(text::tail_chars(sample.text, 200));
  for (const auto& phrase : blacklist) {
    const std::string p = text::ascii_lower(phrase);
    if (p.empty()) continue;
    if (head.find(p) != std::string::npos || tail.find(p) != std::string::npos) {
      return Validity::MetaDiscourse;
    }
  }
  return Validity::Valid;
}

double validity_rate(const std::vector<GenerationSample>& samples, std::size_t theoretical) {
  if (theoretical == 0) throw InputError("validity_rate: theoretical sample count is zero");
  const auto valid = static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(),
                    [](const GenerationSample& s) { return s.validity == Validity::Valid; }));
  if (valid > theoretical) {
    throw InputError("validity_rate: more valid samples than theoretical samples");
  }
  return static_cast<double>(valid) / static_cast<double>(theoretical);
}

std::string format_rate(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job) {
  const std::size_t n_threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace scriptbench::genclient
