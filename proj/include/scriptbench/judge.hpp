#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scriptbench/backend.hpp"
#include "scriptbench/format.hpp"

namespace scriptbench::judge {

struct JudgeScores {
  double overall_similarity_0_100 = 0;
  double plot_event_alignment = 0;
  double character_consistency = 0;
  double tone_style_match = 0;
  double format_match = 0;
  double ending_closure = 0;

  bool operator==(const JudgeScores&) const = default;
};

/// The six score keys in output order.
inline constexpr std::array<const char*, 6> kScoreKeys{
    "overall_similarity_0_100", "plot_event_alignment", "character_consistency",
    "tone_style_match",         "format_match",         "ending_closure"};

double score_by_key(const JudgeScores& s, std::string_view key);

/// Half-up rounding used when printing individual scores.
int reported_score(double score);

struct DiffEvidence {
  std::string reference_quote;
  std::string generated_quote;
  std::string note;
  bool operator==(const DiffEvidence&) const = default;
};

struct MechanismAttribution {
  std::string problem_definition;
  std::string causal_interpretation;
  std::string moral_evaluation;
  std::string treatment_recommendation;
  bool operator==(const MechanismAttribution&) const = default;
};

struct JudgeVerdict {
  JudgeScores scores;
  std::vector<DiffEvidence> diff_evidence;
  MechanismAttribution mechanism_attribution;
  std::string raw;

  bool operator==(const JudgeVerdict&) const = default;
};

inline constexpr std::size_t kMaxDiffEvidence = 10;
inline constexpr std::size_t kMaxAttributionChars = 2000;

/// Structured part of a verdict as the judge is asked to emit it.
nlohmann::json verdict_to_json(const JudgeVerdict& v);

/// Extracts and validates the first JSON object in a judge reply. Throws
/// VerdictError (NoJson / Range / Schema); the raw text is kept on success.
JudgeVerdict parse_verdict(std::string_view response);

struct JudgePromptOptions {
  std::size_t budget_chars = 12000;  // per text, head+tail kept when exceeded
  std::string template_text;         // empty: built-in template
};

extern const char* const kDefaultJudgeTemplate;
extern const char* const kFormatReminder;

struct JudgePrompt {
  std::string system;
  std::string user;
  bool reference_truncated = false;
  bool generated_truncated = false;
};

/// Head+tail sample of `text` within `budget` code points.
std::string truncate_head_tail(std::string_view text, std::size_t budget, bool* truncated);

JudgePrompt build_judge_prompt(std::string_view reference, std::string_view generated,
                               const format::FormatProfile& profile,
                               const JudgePromptOptions& options = {});

std::string template_hash(const JudgePromptOptions& options);

struct JudgeAttempt {
  int attempt = 0;
  int status = 200;
  std::string error;  // empty when the reply parsed
};

struct JudgeOutcome {
  std::optional<JudgeVerdict> verdict;
  std::string failure;  // "parse:<msg>" or "transport:<msg>" when verdict is empty
  std::string last_raw;
  std::vector<JudgeAttempt> attempts;

  bool ok() const { return verdict.has_value(); }
};

/// One call plus up to `max_reasks` re-asks (with a format reminder) on
/// unparseable replies. Transport failures end the loop immediately.
JudgeOutcome judge_sample(std::string_view reference, std::string_view generated,
                          const format::FormatProfile& profile, backend::ChatBackend& backend,
                          const JudgePromptOptions& options = {}, int max_reasks = 2,
                          double temperature = 0.0);

}  // namespace scriptbench::judge
