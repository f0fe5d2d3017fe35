#include "scriptbench/format.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "scriptbench/error.hpp"
#include "scriptbench/text.hpp"

namespace scriptbench::format {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Wire names

std::string to_string(SceneHeaderStyle v) {
  switch (v) {
    case SceneHeaderStyle::NumberBold: return "NUMBER_BOLD";
    case SceneHeaderStyle::NumberDotMeta: return "NUMBER_DOT_META";
    case SceneHeaderStyle::SceneWord: return "SCENE_WORD";
    case SceneHeaderStyle::NumberedPlain: return "NUMBERED_PLAIN";
    case SceneHeaderStyle::Other: return "OTHER";
    case SceneHeaderStyle::None: return "NONE";
  }
  return "NONE";
}

std::string to_string(DialogueMarker v) {
  switch (v) {
    case DialogueMarker::RoleColon: return "ROLE_COLON";
    case DialogueMarker::RoleNewline: return "ROLE_NEWLINE";
    case DialogueMarker::Other: return "OTHER";
  }
  return "OTHER";
}

std::string to_string(StageDirectionMarker v) {
  switch (v) {
    case StageDirectionMarker::Triangle: return "TRIANGLE";
    case StageDirectionMarker::BlackTriangle: return "BLACK_TRIANGLE";
    case StageDirectionMarker::Paren: return "PAREN";
    case StageDirectionMarker::None: return "NONE";
  }
  return "NONE";
}

std::string to_string(BlanklinePolicy v) {
  switch (v) {
    case BlanklinePolicy::SingleNewline: return "SINGLE_NEWLINE";
    case BlanklinePolicy::DoubleNewline: return "DOUBLE_NEWLINE";
    case BlanklinePolicy::Mixed: return "MIXED";
  }
  return "MIXED";
}

std::string to_string(EmphasisStyle v) {
  switch (v) {
    case EmphasisStyle::MarkdownBold: return "MARKDOWN_BOLD";
    case EmphasisStyle::None: return "NONE";
  }
  return "NONE";
}

std::string to_string(LineClass c) {
  switch (c) {
    case LineClass::SceneHeader: return "scene_header";
    case LineClass::StageDirection: return "stage_direction";
    case LineClass::Dialogue: return "dialogue";
    case LineClass::Blank: return "blank";
    case LineClass::Other: return "other";
  }
  return "other";
}

namespace {

template <typename Enum, std::size_t N>
Enum lookup(std::string_view name, const std::array<Enum, N>& values, const char* field) {
  for (Enum v : values) {
    if (to_string(v) == name) return v;
  }
  throw InputError(std::string("unknown ") + field + " '" + std::string(name) + "'");
}

}  // namespace

template <>
SceneHeaderStyle from_string<SceneHeaderStyle>(std::string_view name) {
  return lookup(name, kSceneHeaderStyles, "scene_header_style");
}
template <>
DialogueMarker from_string<DialogueMarker>(std::string_view name) {
  return lookup(name, kDialogueMarkers, "dialogue_marker");
}
template <>
StageDirectionMarker from_string<StageDirectionMarker>(std::string_view name) {
  return lookup(name, kStageDirectionMarkers, "stage_direction_marker");
}
template <>
BlanklinePolicy from_string<BlanklinePolicy>(std::string_view name) {
  return lookup(name, kBlanklinePolicies, "blankline_policy");
}
template <>
EmphasisStyle from_string<EmphasisStyle>(std::string_view name) {
  return lookup(name, kEmphasisStyles, "emphasis_style");
}

bool FormatProfile::same_conventions(const FormatProfile& o) const {
  return scene_header_style == o.scene_header_style && dialogue_marker == o.dialogue_marker &&
         stage_direction_marker == o.stage_direction_marker &&
         blankline_policy == o.blankline_policy && emphasis_style == o.emphasis_style;
}

void to_json(json& j, const FormatProfile& p) {
  j = json{{"scene_header_style", to_string(p.scene_header_style)},
           {"dialogue_marker", to_string(p.dialogue_marker)},
           {"stage_direction_marker", to_string(p.stage_direction_marker)},
           {"blankline_policy", to_string(p.blankline_policy)},
           {"emphasis_style", to_string(p.emphasis_style)},
           {"examples",
            {{"scene_headers", p.examples.scene_headers}, {"dialogues", p.examples.dialogues}}}};
}

void from_json(const json& j, FormatProfile& p) {
  p.scene_header_style = from_string<SceneHeaderStyle>(j.at("scene_header_style").get<std::string>());
  p.dialogue_marker = from_string<DialogueMarker>(j.at("dialogue_marker").get<std::string>());
  p.stage_direction_marker =
      from_string<StageDirectionMarker>(j.at("stage_direction_marker").get<std::string>());
  p.blankline_policy = from_string<BlanklinePolicy>(j.at("blankline_policy").get<std::string>());
  p.emphasis_style = from_string<EmphasisStyle>(j.at("emphasis_style").get<std::string>());
  p.examples = {};
  if (j.contains("examples")) {
    const auto& ex = j["examples"];
    p.examples.scene_headers = ex.value("scene_headers", std::vector<std::string>{});
    p.examples.dialogues = ex.value("dialogues", std::vector<std::string>{});
  }
}

void to_json(json& j, const StructuralFeatures& f) {
  j = json{{"scene_ratio", f.scene_ratio},
           {"dialogue_ratio", f.dialogue_ratio},
           {"blank_ratio", f.blank_ratio},
           {"stage_ratio", f.stage_ratio},
           {"bold_density", f.bold_density}};
}

void from_json(const json& j, StructuralFeatures& f) {
  f.scene_ratio = j.at("scene_ratio").get<double>();
  f.dialogue_ratio = j.at("dialogue_ratio").get<double>();
  f.blank_ratio = j.at("blank_ratio").get<double>();
  f.stage_ratio = j.at("stage_ratio").get<double>();
  f.bold_density = j.at("bold_density").get<double>();
}

// ---------------------------------------------------------------------------
// Line detectors. All operate on the trimmed line as code points.

namespace {

using U32 = std::u32string;
using U32View = std::u32string_view;

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_upper(char32_t c) { return c >= U'A' && c <= U'Z'; }
bool is_lower(char32_t c) { return c >= U'a' && c <= U'z'; }

bool starts_with(U32View s, U32View prefix) { return s.substr(0, prefix.size()) == prefix; }

bool starts_with_ci(U32View s, std::string_view ascii) {
  if (s.size() < ascii.size()) return false;
  for (std::size_t i = 0; i < ascii.size(); ++i) {
    char32_t c = s[i];
    if (is_upper(c)) c = c - U'A' + U'a';
    char a = ascii[i];
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
    if (c != static_cast<char32_t>(a)) return false;
  }
  return true;
}

bool contains(U32View s, U32View needle) { return s.find(needle) != U32View::npos; }

bool is_sentence_punct(char32_t c) {
  switch (c) {
    case U'.': case U',': case U'!': case U'?': case U';': case U'"':
    case 0x3002: case 0xFF0C: case 0xFF01: case 0xFF1F: case 0xFF1B:  // 。，！？；
    case 0x3001:                                                      // 、
    case 0x201C: case 0x201D: case 0x2026:                            // “ ” …
      return true;
    default:
      return false;
  }
}

bool is_colon(char32_t c) { return c == U':' || c == 0xFF1A; }
bool is_open_paren(char32_t c) { return c == U'(' || c == 0xFF08; }
bool is_close_paren(char32_t c) { return c == U')' || c == 0xFF09; }

int count_bold_pairs(U32View s) {
  int markers = 0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == U'*' && s[i + 1] == U'*') {
      ++markers;
      ++i;
    }
  }
  return markers / 2;
}

bool has_meta_separator(U32View rest) {
  for (char32_t c : rest) {
    if (c == U',' || c == 0xFF0C || c == U'/' || c == 0x3001 || c == 0x2014 || c == 0xFF0D) {
      return true;
    }
  }
  return contains(rest, U" - ");
}

bool has_meta_word(U32View rest) {
  static const std::array<U32View, 13> words{U"Day",   U"Night", U"Interior", U"Exterior",
                                             U"INT",   U"EXT",   U"日",  U"夜",
                                             U"内", U"外", U"晨", U"昏",
                                             U"Morning"};
  return std::any_of(words.begin(), words.end(), [&](U32View w) { return contains(rest, w); });
}

std::optional<SceneHeaderStyle> scene_style(U32View s) {
  if (s.empty()) return std::nullopt;
  // "**12**..." bold scene number
  if (starts_with(s, U"**")) {
    std::size_t i = 2;
    const std::size_t d0 = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i > d0 && starts_with(s.substr(i), U"**")) return SceneHeaderStyle::NumberBold;
    return std::nullopt;
  }
  if (is_digit(s[0])) {
    std::size_t i = 0;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i > 4) return std::nullopt;
    if (i == s.size()) return SceneHeaderStyle::NumberedPlain;
    const char32_t sep = s[i];
    if (sep != U'.' && sep != 0x3001 && sep != 0xFF0E) return std::nullopt;
    const U32 rest = text::trim(s.substr(i + 1));
    if (rest.empty()) return SceneHeaderStyle::NumberedPlain;
    if (rest.size() <= 40 && !is_sentence_punct(rest.back()) &&
        (has_meta_separator(rest) || has_meta_word(rest))) {
      return SceneHeaderStyle::NumberDotMeta;
    }
    return std::nullopt;
  }
  if (starts_with_ci(s, "scene") && s.size() <= 40) {
    if (s.size() == 5 || s[5] == U' ' || is_digit(s[5])) return SceneHeaderStyle::SceneWord;
  }
  if (starts_with(s, U"场景") && s.size() <= 40) return SceneHeaderStyle::SceneWord;  // 场景
  if (s[0] == 0x7B2C && s.size() <= 40) {                                                   // 第…场
    std::size_t i = 1;
    static const U32View numerals = U"0123456789一二三四五六七八九十百零";
    while (i < s.size() && numerals.find(s[i]) != U32View::npos) ++i;
    if (i > 1 && i < s.size() && s[i] == 0x573A) return SceneHeaderStyle::SceneWord;
  }
  if (starts_with(s, U"INT.") || starts_with(s, U"EXT.") || starts_with(s, U"INT/EXT") ||
      starts_with(s, U"I/E.") || starts_with(s, U"内景") ||  // 内景
      starts_with(s, U"外景")) {                              // 外景
    return SceneHeaderStyle::Other;
  }
  if (s.front() == 0x3010 && s.back() == 0x3011 && s.size() <= 40) return SceneHeaderStyle::Other;
  return std::nullopt;
}

std::optional<StageDirectionMarker> stage_marker(U32View s) {
  if (s.empty()) return std::nullopt;
  if (s[0] == 0x0394 || s[0] == 0x25B3) return StageDirectionMarker::Triangle;
  if (s[0] == 0x25B2) return StageDirectionMarker::BlackTriangle;
  if (s.size() >= 2 && is_open_paren(s.front()) && is_close_paren(s.back())) {
    return StageDirectionMarker::Paren;
  }
  return std::nullopt;
}

// "Name: line" with a short, punctuation-free name.
bool is_role_colon(U32View s) {
  std::size_t colon = U32View::npos;
  for (std::size_t i = 0; i < s.size() && i <= 24; ++i) {
    if (is_colon(s[i])) {
      colon = i;
      break;
    }
  }
  if (colon == U32View::npos || colon == 0) return false;
  const U32 name = text::trim(s.substr(0, colon));
  const U32 speech = text::trim(s.substr(colon + 1));
  if (name.empty() || speech.empty() || is_digit(name[0])) return false;
  if (starts_with(name, U"**")) return false;
  int spaces = 0;
  for (char32_t c : name) {
    if (is_sentence_punct(c) || c == U'*') return false;
    if (c == U' ') ++spaces;
  }
  return spaces <= 3;
}

// Strip a trailing "(V.O.)" / "（画外音）" style extension from a cue.
U32View strip_extension(U32View s) {
  if (!s.empty() && is_close_paren(s.back())) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (is_open_paren(s[i])) {
        U32View head = s.substr(0, i);
        while (!head.empty() && text::is_space(head.back())) head.remove_suffix(1);
        return head;
      }
    }
  }
  return s;
}

// A bare speaker name: an upper-case Latin cue ("QIN FENG") or a short CJK name.
bool is_role_cue(U32View s) {
  if (s.empty() || s.size() > 24) return false;
  const U32View name = strip_extension(s);
  if (name.empty() || is_digit(name[0])) return false;
  for (char32_t c : name) {
    if (is_sentence_punct(c) || is_colon(c) || c == U'*') return false;
  }
  bool all_cjk = true;
  int letters = 0;
  bool latin_ok = true;
  for (char32_t c : name) {
    if (!text::is_cjk(c)) all_cjk = false;
    if (is_upper(c)) ++letters;
    else if (is_lower(c)) latin_ok = false;
    else if (c != U' ' && c != U'-' && c != U'\'') latin_ok = false;
  }
  if (all_cjk) return name.size() <= 6;
  return latin_ok && letters >= 2;
}

bool is_other_dialogue(U32View s) {
  if (s.empty()) return false;
  return s[0] == 0x2014 || starts_with(s, U"--") || s[0] == 0x201C || s[0] == U'"' ||
         s[0] == 0x300C;
}

bool scene_active(const FormatProfile* hint, SceneHeaderStyle style) {
  if (!hint) return true;
  const auto h = hint->scene_header_style;
  return h == SceneHeaderStyle::None || h == SceneHeaderStyle::Other || h == style;
}

bool stage_active(const FormatProfile* hint, StageDirectionMarker m) {
  if (!hint) return true;
  const auto h = hint->stage_direction_marker;
  return h == StageDirectionMarker::None || h == m;
}

bool dialogue_active(const FormatProfile* hint, DialogueMarker m) {
  if (!hint) return m != DialogueMarker::RoleNewline;
  const auto h = hint->dialogue_marker;
  if (h == DialogueMarker::Other) return m != DialogueMarker::RoleNewline;
  return h == m;
}

bool context_cue_allowed(const FormatProfile* hint) {
  return !hint || hint->dialogue_marker != DialogueMarker::RoleColon;
}

LineInfo classify_trimmed(U32View s, const FormatProfile* hint) {
  LineInfo info;
  if (s.empty()) {
    info.cls = LineClass::Blank;
    return info;
  }
  info.bold_pairs = count_bold_pairs(s);
  if (auto style = scene_style(s); style && scene_active(hint, *style)) {
    info.cls = LineClass::SceneHeader;
    info.scene = *style;
    return info;
  }
  if (auto marker = stage_marker(s); marker && stage_active(hint, *marker)) {
    info.cls = LineClass::StageDirection;
    info.stage = *marker;
    return info;
  }
  if (dialogue_active(hint, DialogueMarker::RoleColon) && is_role_colon(s)) {
    info.cls = LineClass::Dialogue;
    info.dialogue = DialogueMarker::RoleColon;
    return info;
  }
  if (dialogue_active(hint, DialogueMarker::RoleNewline) && is_role_cue(s)) {
    info.cls = LineClass::Dialogue;
    info.dialogue = DialogueMarker::RoleNewline;
    info.role_cue = true;
    return info;
  }
  if (dialogue_active(hint, DialogueMarker::Other) && is_other_dialogue(s)) {
    info.cls = LineClass::Dialogue;
    info.dialogue = DialogueMarker::Other;
    return info;
  }
  info.cls = LineClass::Other;
  return info;
}

}  // namespace

LineInfo classify_line(std::string_view line, const FormatProfile* hint) {
  const U32 s = text::trim(text::decode(line));
  return classify_trimmed(s, hint);
}

std::vector<LineInfo> classify_lines(const std::vector<std::string_view>& lines,
                                     const FormatProfile* hint) {
  std::vector<U32> trimmed;
  trimmed.reserve(lines.size());
  for (auto l : lines) trimmed.push_back(text::trim(text::decode(l)));

  std::vector<LineInfo> out(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) out[i] = classify_trimmed(trimmed[i], hint);

  // Pair name lines with the spoken line directly below them.
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    LineInfo& cur = out[i];
    const bool cue_candidate =
        cur.role_cue || (cur.cls == LineClass::Other && context_cue_allowed(hint) &&
                         is_role_cue(trimmed[i]));
    if (!cue_candidate) continue;
    LineInfo& next = out[i + 1];
    if (next.cls != LineClass::Other) {
      continue;
    }
    cur.cls = LineClass::Dialogue;
    cur.dialogue = DialogueMarker::RoleNewline;
    cur.role_cue = true;
    next.cls = LineClass::Dialogue;
    next.dialogue = DialogueMarker::RoleNewline;
    ++i;
  }
  return out;
}

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> vote(const std::map<Enum, std::size_t>& counts,
                         const std::array<Enum, N>& order, std::size_t nonblank,
                         const DetectOptions& opt) {
  std::optional<Enum> best;
  std::size_t best_count = 0;
  for (Enum e : order) {
    auto it = counts.find(e);
    const std::size_t c = it == counts.end() ? 0 : it->second;
    if (c > best_count) {
      best = e;
      best_count = c;
    }
  }
  if (!best || best_count < opt.min_lines ||
      static_cast<double>(best_count) < opt.min_fraction * static_cast<double>(nonblank)) {
    return std::nullopt;
  }
  return best;
}

}  // namespace

FormatProfile detect_profile(std::string_view text_utf8, const DetectOptions& options) {
  const auto lines = text::split_lines(text_utf8);
  const auto infos = classify_lines(lines, nullptr);

  std::size_t nonblank = 0;
  std::map<SceneHeaderStyle, std::size_t> scene_counts;
  std::map<DialogueMarker, std::size_t> dialogue_counts;
  std::map<StageDirectionMarker, std::size_t> stage_counts;
  std::size_t bold_lines = 0;
  for (std::size_t i = 0; i < infos.size(); ++i) {
    const auto& info = infos[i];
    if (info.cls == LineClass::Blank) continue;
    ++nonblank;
    switch (info.cls) {
      case LineClass::SceneHeader: ++scene_counts[info.scene]; break;
      case LineClass::StageDirection: ++stage_counts[info.stage]; break;
      case LineClass::Dialogue:
        // A ROLE_NEWLINE pair votes once, through its name line.
        if (info.dialogue != DialogueMarker::RoleNewline || info.role_cue) {
          ++dialogue_counts[info.dialogue];
        }
        break;
      default: break;
    }
    const bool bold_is_header =
        info.cls == LineClass::SceneHeader && info.scene == SceneHeaderStyle::NumberBold;
    if (info.bold() && !bold_is_header) ++bold_lines;
  }

  FormatProfile p;
  p.scene_header_style =
      vote(scene_counts, kSceneHeaderStyles, nonblank, options).value_or(SceneHeaderStyle::None);
  p.dialogue_marker =
      vote(dialogue_counts, kDialogueMarkers, nonblank, options).value_or(DialogueMarker::Other);
  p.stage_direction_marker = vote(stage_counts, kStageDirectionMarkers, nonblank, options)
                                 .value_or(StageDirectionMarker::None);
  {
    std::map<EmphasisStyle, std::size_t> emph{{EmphasisStyle::MarkdownBold, bold_lines}};
    p.emphasis_style =
        vote(emph, kEmphasisStyles, nonblank, options).value_or(EmphasisStyle::None);
  }

  // Gaps between consecutive non-blank lines; a name line and its speech
  // are one block.
  std::size_t tight = 0;
  std::size_t spaced = 0;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < infos.size(); ++i) {
    if (infos[i].cls == LineClass::Blank) continue;
    if (prev && !infos[*prev].role_cue) {
      if (i - *prev - 1 == 0) ++tight;
      else ++spaced;
    }
    prev = i;
  }
  const std::size_t gaps = tight + spaced;
  if (gaps == 0) {
    p.blankline_policy = BlanklinePolicy::Mixed;
  } else if (static_cast<double>(spaced) >= options.policy_majority * static_cast<double>(gaps)) {
    p.blankline_policy = BlanklinePolicy::DoubleNewline;
  } else if (static_cast<double>(tight) >= options.policy_majority * static_cast<double>(gaps)) {
    p.blankline_policy = BlanklinePolicy::SingleNewline;
  } else {
    p.blankline_policy = BlanklinePolicy::Mixed;
  }

  for (std::size_t i = 0; i < infos.size(); ++i) {
    const auto& info = infos[i];
    if (info.cls == LineClass::SceneHeader && p.scene_header_style != SceneHeaderStyle::None &&
        info.scene == p.scene_header_style &&
        p.examples.scene_headers.size() < options.max_examples) {
      p.examples.scene_headers.push_back(text::trim(lines[i]));
    }
    const bool vote_line = info.dialogue != DialogueMarker::RoleNewline || info.role_cue;
    if (info.cls == LineClass::Dialogue && vote_line && info.dialogue == p.dialogue_marker &&
        p.examples.dialogues.size() < options.max_examples) {
      p.examples.dialogues.push_back(text::trim(lines[i]));
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Contract

namespace {

std::string quote_examples(const std::vector<std::string>& lines, std::size_t limit) {
  std::string out;
  for (std::size_t i = 0; i < lines.size() && i < limit; ++i) {
    out += i == 0 ? " Example: \"" : " / \"";
    out += lines[i];
    out += "\"";
  }
  if (!out.empty()) out += ".";
  return out;
}

}  // namespace

std::string render_contract(const FormatProfile& p) {
  std::ostringstream os;
  os << "Format Contract (follow every item):\n";

  os << "- Scene headings [" << to_string(p.scene_header_style) << "]: ";
  switch (p.scene_header_style) {
    case SceneHeaderStyle::NumberBold:
      os << "open each scene with a bold scene number followed by the scene label, "
            "as in \"**1**, Scene\".";
      break;
    case SceneHeaderStyle::NumberDotMeta:
      os << "open each scene with a line \"<number>. <place/time/interior-exterior>\", "
            "as in \"1. Scene, Day, Interior\".";
      break;
    case SceneHeaderStyle::SceneWord:
      os << "open each scene with the word \"Scene\" and its number, as in \"Scene 3\".";
      break;
    case SceneHeaderStyle::NumberedPlain:
      os << "open each scene with a line holding only the scene number, as in \"12.\".";
      break;
    case SceneHeaderStyle::Other:
      os << "keep the script's own scene heading convention exactly as in Part I.";
      break;
    case SceneHeaderStyle::None:
      os << "the script uses no special scene headers; do not add numbered or labelled "
            "scene headings.";
      break;
  }
  os << quote_examples(p.examples.scene_headers, 2) << "\n";

  os << "- Dialogue [" << to_string(p.dialogue_marker) << "]: ";
  switch (p.dialogue_marker) {
    case DialogueMarker::RoleColon:
      os << "write every spoken line as \"Role: line\" on a single line, role name first, "
            "then a colon.";
      break;
    case DialogueMarker::RoleNewline:
      os << "put the speaking role's name alone on its own line and the spoken line "
            "directly on the next line; never use \"Role: line\".";
      break;
    case DialogueMarker::Other:
      os << "keep dialogue in the script's own layout (e.g. dash- or quote-led lines); "
            "do not switch to \"Role: line\" or name-above-line layouts.";
      break;
  }
  os << quote_examples(p.examples.dialogues, 2) << "\n";

  os << "- Stage directions [" << to_string(p.stage_direction_marker) << "]: ";
  switch (p.stage_direction_marker) {
    case StageDirectionMarker::Triangle:
      os << "begin every stage direction line with the symbol \"\xCE\x94\".";
      break;
    case StageDirectionMarker::BlackTriangle:
      os << "begin every stage direction line with the symbol \"\xE2\x96\xB2\".";
      break;
    case StageDirectionMarker::Paren:
      os << "write stage directions in parentheses on their own line, as in "
            "\"(He turns and exits.)\".";
      break;
    case StageDirectionMarker::None:
      os << "no special stage direction symbols; write action as plain lines.";
      break;
  }
  os << "\n";

  os << "- Blank lines [" << to_string(p.blankline_policy) << "]: ";
  switch (p.blankline_policy) {
    case BlanklinePolicy::SingleNewline:
      os << "separate lines with a single line break and do not insert blank lines.";
      break;
    case BlanklinePolicy::DoubleNewline:
      os << "separate every block (scene heading, speech, direction, action) with exactly "
            "one blank line.";
      break;
    case BlanklinePolicy::Mixed:
      os << "blank lines are used irregularly; follow the spacing habits of Part I.";
      break;
  }
  os << "\n";

  os << "- Emphasis [" << to_string(p.emphasis_style) << "]: ";
  switch (p.emphasis_style) {
    case EmphasisStyle::MarkdownBold:
      os << "Part I marks emphasis with markdown bold (**text**); keep using it the same way.";
      break;
    case EmphasisStyle::None:
      os << "do not use markdown bold or any other emphasis markup.";
      break;
  }
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Features

StructuralFeatures extract_features(std::string_view text_utf8, const FormatProfile& profile) {
  const auto lines = text::split_lines(text_utf8);
  StructuralFeatures f;
  if (lines.empty()) return f;
  const auto infos = classify_lines(lines, &profile);
  std::size_t scene = 0, dialogue = 0, blank = 0, stage = 0;
  long bold = 0;
  for (const auto& info : infos) {
    switch (info.cls) {
      case LineClass::SceneHeader: ++scene; break;
      case LineClass::Dialogue: ++dialogue; break;
      case LineClass::Blank: ++blank; break;
      case LineClass::StageDirection: ++stage; break;
      case LineClass::Other: break;
    }
    bold += info.bold_pairs;
  }
  const double n = static_cast<double>(lines.size());
  f.scene_ratio = static_cast<double>(scene) / n;
  f.dialogue_ratio = static_cast<double>(dialogue) / n;
  f.blank_ratio = static_cast<double>(blank) / n;
  f.stage_ratio = static_cast<double>(stage) / n;
  f.bold_density = static_cast<double>(bold) / n;
  return f;
}

}  // namespace scriptbench::format
