#include "scriptbench/judge.hpp"

#include <cmath>
#include <sstream>

#include "scriptbench/error.hpp"
#include "scriptbench/jsonutil.hpp"
#include "scriptbench/text.hpp"

namespace scriptbench::judge {

using nlohmann::json;

double score_by_key(const JudgeScores& s, std::string_view key) {
  if (key == "overall_similarity_0_100") return s.overall_similarity_0_100;
  if (key == "plot_event_alignment") return s.plot_event_alignment;
  if (key == "character_consistency") return s.character_consistency;
  if (key == "tone_style_match") return s.tone_style_match;
  if (key == "format_match") return s.format_match;
  if (key == "ending_closure") return s.ending_closure;
  throw InputError("unknown score key '" + std::string(key) + "'");
}

namespace {

double& score_ref(JudgeScores& s, std::string_view key) {
  if (key == "overall_similarity_0_100") return s.overall_similarity_0_100;
  if (key == "plot_event_alignment") return s.plot_event_alignment;
  if (key == "character_consistency") return s.character_consistency;
  if (key == "tone_style_match") return s.tone_style_match;
  if (key == "format_match") return s.format_match;
  return s.ending_closure;
}

std::string cap_chars(std::string s, std::size_t limit) {
  if (text::char_count(s) <= limit) return s;
  return std::string(text::head_chars(s, limit));
}

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

}  // namespace

int reported_score(double score) { return static_cast<int>(std::floor(score + 0.5)); }

json verdict_to_json(const JudgeVerdict& v) {
  json j;
  for (const char* key : kScoreKeys) j[key] = score_by_key(v.scores, key);
  json evidence = json::array();
  for (const auto& e : v.diff_evidence) {
    evidence.push_back({{"reference_quote", e.reference_quote},
                        {"generated_quote", e.generated_quote},
                        {"note", e.note}});
  }
  j["diff_evidence"] = evidence;
  const auto& m = v.mechanism_attribution;
  j["mechanism_attribution"] = {{"problem_definition", m.problem_definition},
                                {"causal_interpretation", m.causal_interpretation},
                                {"moral_evaluation", m.moral_evaluation},
                                {"treatment_recommendation", m.treatment_recommendation}};
  return j;
}

JudgeVerdict parse_verdict(std::string_view response) {
  const auto obj = jsonutil::extract_first_object(response);
  if (!obj) throw VerdictError(VerdictError::Kind::NoJson, "no JSON object in judge reply");

  const json& scores =
      obj->contains("scores") && (*obj)["scores"].is_object() ? (*obj)["scores"] : *obj;
  JudgeVerdict v;
  for (const char* key : kScoreKeys) {
    auto it = scores.find(key);
    if (it == scores.end()) {
      throw VerdictError(VerdictError::Kind::Schema, std::string("missing score key '") + key + "'");
    }
    double value;
    if (it->is_number()) {
      value = it->get<double>();
    } else if (it->is_string()) {
      // Some judges quote numbers; accept them when they parse cleanly.
      std::istringstream ss(it->get<std::string>());
      if (!(ss >> value) || !(ss >> std::ws).eof()) {
        throw VerdictError(VerdictError::Kind::Schema,
                           std::string("score '") + key + "' is not a number");
      }
    } else {
      throw VerdictError(VerdictError::Kind::Schema,
                         std::string("score '") + key + "' is not a number");
    }
    if (!(value >= 0.0 && value <= 100.0)) {
      std::ostringstream msg;
      msg << "score '" << key << "' = " << value << " outside [0, 100]";
      throw VerdictError(VerdictError::Kind::Range, msg.str());
    }
    score_ref(v.scores, key) = value;
  }

  if (auto it = obj->find("diff_evidence"); it != obj->end() && it->is_array()) {
    for (const auto& e : *it) {
      if (v.diff_evidence.size() >= kMaxDiffEvidence) break;
      if (!e.is_object()) continue;
      v.diff_evidence.push_back({string_field(e, "reference_quote"),
                                 string_field(e, "generated_quote"), string_field(e, "note")});
    }
  }
  if (auto it = obj->find("mechanism_attribution"); it != obj->end() && it->is_object()) {
    auto& m = v.mechanism_attribution;
    m.problem_definition = cap_chars(string_field(*it, "problem_definition"), kMaxAttributionChars);
    m.causal_interpretation =
        cap_chars(string_field(*it, "causal_interpretation"), kMaxAttributionChars);
    m.moral_evaluation = cap_chars(string_field(*it, "moral_evaluation"), kMaxAttributionChars);
    m.treatment_recommendation =
        cap_chars(string_field(*it, "treatment_recommendation"), kMaxAttributionChars);
  }
  v.raw = std::string(response);
  return v;
}

// ---------------------------------------------------------------------------
// Prompt

// Keep in sync with prompts/judge_v1.txt (a unit test compares them).
const char* const kDefaultJudgeTemplate =
    R"(You are judging a screenplay continuation against the real second half of the same script.

Reference format profile:
{{PROFILE}}
{{TRUNCATION_NOTE}}
Compare GENERATED against REFERENCE and score each dimension from 0 to 100:
- overall_similarity_0_100: comprehensive similarity considering plot, character, style and format
- plot_event_alignment: alignment of key events and plot turns with the reference
- character_consistency: consistency of character personality, motivation and relationships
- tone_style_match: match of tone, atmosphere and narrative style
- format_match: match of scene headings, dialogue format, stage directions and layout
- ending_closure: narrative conclusion, thematic resonance and ending completeness

Also list up to 10 diff_evidence items quoting short segments from both texts, and analyse how
the continuation frames the story with the four framing elements: problem_definition,
causal_interpretation, moral_evaluation, treatment_recommendation.

Reply with strict JSON only, exactly these keys:
{"overall_similarity_0_100": <0-100>, "plot_event_alignment": <0-100>,
 "character_consistency": <0-100>, "tone_style_match": <0-100>, "format_match": <0-100>,
 "ending_closure": <0-100>,
 "diff_evidence": [{"reference_quote": "...", "generated_quote": "...", "note": "..."}],
 "mechanism_attribution": {"problem_definition": "...", "causal_interpretation": "...",
  "moral_evaluation": "...", "treatment_recommendation": "..."}}

<<<REFERENCE>>>
{{REFERENCE}}
<<<END REFERENCE>>>

<<<GENERATED>>>
{{GENERATED}}
<<<END GENERATED>>>
)";

const char* const kFormatReminder =
    "\n\nYour previous reply could not be parsed. Reply again with one strict JSON object "
    "containing all six score keys (numbers from 0 to 100), \"diff_evidence\" and "
    "\"mechanism_attribution\", and no other text.";

namespace {

const char* const kJudgeSystem =
    "You are a meticulous screenplay evaluator. You answer only with the JSON object requested.";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string truncate_head_tail(std::string_view text_utf8, std::size_t budget, bool* truncated) {
  const std::size_t n = text::char_count(text_utf8);
  if (n <= budget) {
    if (truncated) *truncated = false;
    return std::string(text_utf8);
  }
  if (truncated) *truncated = true;
  const std::size_t head = budget / 2;
  const std::size_t tail = budget - head;
  std::string out(text::head_chars(text_utf8, head));
  out += "\n[... " + std::to_string(n - head - tail) + " characters omitted ...]\n";
  out += text::tail_chars(text_utf8, tail);
  return out;
}

JudgePrompt build_judge_prompt(std::string_view reference, std::string_view generated,
                               const format::FormatProfile& profile,
                               const JudgePromptOptions& options) {
  if (reference.empty() || generated.empty()) {
    throw InputError("build_judge_prompt: reference and generated texts must be non-empty");
  }
  JudgePrompt p;
  p.system = kJudgeSystem;
  const std::string ref = truncate_head_tail(reference, options.budget_chars, &p.reference_truncated);
  const std::string gen = truncate_head_tail(generated, options.budget_chars, &p.generated_truncated);

  std::string note;
  if (p.reference_truncated || p.generated_truncated) {
    note = "\nNote: ";
    if (p.reference_truncated) note += "REFERENCE ";
    if (p.reference_truncated && p.generated_truncated) note += "and ";
    if (p.generated_truncated) note += "GENERATED ";
    note += "exceeded " + std::to_string(options.budget_chars) +
            " characters and were shortened to their beginning and end; the omitted middle is "
            "marked in the text.\n";
  }

  json summary = profile;
  summary.erase("examples");
  std::string user = options.template_text.empty() ? kDefaultJudgeTemplate : options.template_text;
  // Texts go in last so placeholders inside them are never expanded.
  replace_all(user, "{{PROFILE}}", summary.dump());
  replace_all(user, "{{TRUNCATION_NOTE}}", note);
  const auto ref_at = user.find("{{REFERENCE}}");
  if (ref_at != std::string::npos) user.replace(ref_at, 13, ref);
  const auto gen_at = user.find("{{GENERATED}}", ref_at == std::string::npos ? 0 : ref_at + ref.size());
  if (gen_at != std::string::npos) user.replace(gen_at, 13, gen);
  p.user = std::move(user);
  return p;
}

std::string template_hash(const JudgePromptOptions& options) {
  return jsonutil::sha256_hex(options.template_text.empty() ? std::string(kDefaultJudgeTemplate)
                                                            : options.template_text);
}

JudgeOutcome judge_sample(std::string_view reference, std::string_view generated,
                          const format::FormatProfile& profile, backend::ChatBackend& chat,
                          const JudgePromptOptions& options, int max_reasks, double temperature) {
  const JudgePrompt prompt = build_judge_prompt(reference, generated, profile, options);
  backend::ChatRequest req;
  req.system = prompt.system;
  req.user = prompt.user;
  req.temperature = temperature;
  req.max_output_tokens = 4096;

  JudgeOutcome outcome;
  for (int attempt = 0; attempt <= max_reasks; ++attempt) {
    if (attempt > 0) req.user = prompt.user + kFormatReminder;
    const backend::ChatResponse resp = chat.complete(req);
    JudgeAttempt a{attempt, resp.status, {}};
    if (!resp.ok()) {
      a.error = resp.error.empty() ? "HTTP " + std::to_string(resp.status) : resp.error;
      outcome.attempts.push_back(a);
      outcome.failure = "transport: " + a.error;
      return outcome;
    }
    outcome.last_raw = resp.text;
    try {
      outcome.verdict = parse_verdict(resp.text);
      outcome.attempts.push_back(a);
      outcome.failure.clear();
      return outcome;
    } catch (const VerdictError& e) {
      a.error = e.what();
      outcome.attempts.push_back(a);
      outcome.failure = std::string("parse: ") + e.what();
    }
  }
  return outcome;
}

}  // namespace scriptbench::judge
