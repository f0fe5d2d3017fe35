#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scriptbench/backend.hpp"

namespace scriptbench::genclient {

struct GenerationConfig {
  double min_ratio = 0.6;
  double max_ratio = 0.9;
  std::size_t chunk_min_chars = 3500;
  std::size_t chunk_max_chars = 6500;
  std::size_t tail_context_chars = 4000;
  int max_calls = 10;
  double temperature = 0.7;
  int samples_per_film = 3;
  double chars_per_token = 2.0;  // output-token ceiling = chunk chars / this
  int timeout_retries = 0;

  /// Throws ConfigError when the invariants do not hold.
  void validate() const;
};

void to_json(nlohmann::json& j, const GenerationConfig& c);
void from_json(const nlohmann::json& j, GenerationConfig& c);

enum class Validity {
  Valid,
  TooShort,
  TooLong,
  MetaDiscourse,
  ParseFailure,
  ApiTimeout,
  ApiModeration,
  ApiOther
};

std::string to_string(Validity v);
Validity validity_from_string(std::string_view s);

struct ChunkTrace {
  int call_index = 0;
  std::size_t chars_returned = 0;
  int status = 200;
  std::string outcome = "ok";  // ok | retried | timeout | moderation | api_error | parse_error
  std::size_t requested_min = 0;
  std::size_t requested_max = 0;
  std::size_t context_chars = 0;

  bool operator==(const ChunkTrace&) const = default;
};

struct GenerationSample {
  std::string model_id;
  std::string film_id;
  int sample_idx = 0;
  std::string text;
  std::vector<ChunkTrace> chunk_trace;
  Validity validity = Validity::Valid;
  std::size_t upper_chars = 0;

  bool operator==(const GenerationSample&) const = default;
};

void to_json(nlohmann::json& j, const GenerationSample& s);
void from_json(const nlohmann::json& j, GenerationSample& s);

struct Prompts {
  std::string system;
  std::string user;
};

/// Fixed screenwriter persona used as the system message.
extern const char* const kSystemPrompt;

/// Markers framing Part I inside the user message.
extern const char* const kPartIBegin;
extern const char* const kPartIEnd;
extern const char* const kContextBegin;
extern const char* const kContextEnd;

Prompts build_prompts(std::string_view upper, std::string_view contract,
                      const GenerationConfig& config);

struct TargetRange {
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  bool degenerate() const { return min_len == 0; }
};

TargetRange target_range(long long upper_chars, const GenerationConfig& config);

/// Request for one chunk: the base prompts plus the tail of what has been
/// generated so far and the size window for this call.
backend::ChatRequest build_chunk_request(const Prompts& base, std::string_view accumulated,
                                         std::size_t request_min, std::size_t request_max,
                                         const GenerationConfig& config);

/// Extracts the text of a {"continuation": "..."} envelope.
std::optional<std::string> parse_envelope(std::string_view response);

struct SampleKey {
  std::string model_id;
  std::string film_id;
  int sample_idx = 0;
};

std::vector<std::string> default_blacklist();
std::vector<std::string> load_blacklist(const std::string& path);

/// Chunked generation loop. Stops once the minimum target length is reached,
/// max_calls is exhausted or the backend fails; partial text is kept.
GenerationSample continue_script(std::string_view upper, std::string_view contract,
                                 backend::ChatBackend& backend, const GenerationConfig& config,
                                 const SampleKey& key = {},
                                 const std::vector<std::string>& blacklist = default_blacklist());

/// First failing check in order: carried API error, parse failure, too short,
/// too long, meta-discourse (case-insensitive, first/last 200 chars).
Validity classify_validity(const GenerationSample& sample, std::size_t upper_chars,
                           const GenerationConfig& config,
                           const std::vector<std::string>& blacklist);

/// valid / theoretical. Throws InputError for theoretical == 0 or fewer
/// theoretical than valid samples.
double validity_rate(const std::vector<GenerationSample>& samples, std::size_t theoretical);

/// "98.7%" style rendering, one decimal.
std::string format_rate(double fraction);

/// Runs `job(i)` for i in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job);

}  // namespace scriptbench::genclient
