#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scriptbench::format {

enum class SceneHeaderStyle { NumberBold, NumberDotMeta, SceneWord, NumberedPlain, Other, None };
enum class DialogueMarker { RoleColon, RoleNewline, Other };
enum class StageDirectionMarker { Triangle, BlackTriangle, Paren, None };
enum class BlanklinePolicy { SingleNewline, DoubleNewline, Mixed };
enum class EmphasisStyle { MarkdownBold, None };

// Wire names ("NUMBER_BOLD", "ROLE_COLON", ...). from_string throws InputError.
std::string to_string(SceneHeaderStyle v);
std::string to_string(DialogueMarker v);
std::string to_string(StageDirectionMarker v);
std::string to_string(BlanklinePolicy v);
std::string to_string(EmphasisStyle v);
template <typename Enum>
Enum from_string(std::string_view name);

inline constexpr std::array kSceneHeaderStyles{
    SceneHeaderStyle::NumberBold, SceneHeaderStyle::NumberDotMeta, SceneHeaderStyle::SceneWord,
    SceneHeaderStyle::NumberedPlain, SceneHeaderStyle::Other, SceneHeaderStyle::None};
inline constexpr std::array kDialogueMarkers{DialogueMarker::RoleColon, DialogueMarker::RoleNewline,
                                             DialogueMarker::Other};
inline constexpr std::array kStageDirectionMarkers{
    StageDirectionMarker::Triangle, StageDirectionMarker::BlackTriangle,
    StageDirectionMarker::Paren, StageDirectionMarker::None};
inline constexpr std::array kBlanklinePolicies{
    BlanklinePolicy::SingleNewline, BlanklinePolicy::DoubleNewline, BlanklinePolicy::Mixed};
inline constexpr std::array kEmphasisStyles{EmphasisStyle::MarkdownBold, EmphasisStyle::None};

struct ProfileExamples {
  std::vector<std::string> scene_headers;
  std::vector<std::string> dialogues;
  bool operator==(const ProfileExamples&) const = default;
};

/// Detected formatting conventions of one script. Every field always holds a
/// value; NONE/OTHER are ordinary values.
struct FormatProfile {
  SceneHeaderStyle scene_header_style = SceneHeaderStyle::None;
  DialogueMarker dialogue_marker = DialogueMarker::Other;
  StageDirectionMarker stage_direction_marker = StageDirectionMarker::None;
  BlanklinePolicy blankline_policy = BlanklinePolicy::Mixed;
  EmphasisStyle emphasis_style = EmphasisStyle::None;
  ProfileExamples examples;

  bool operator==(const FormatProfile&) const = default;
  /// Equality on the five convention fields, ignoring examples.
  bool same_conventions(const FormatProfile& other) const;
};

void to_json(nlohmann::json& j, const FormatProfile& p);
void from_json(const nlohmann::json& j, FormatProfile& p);

enum class LineClass { SceneHeader, StageDirection, Dialogue, Blank, Other };
std::string to_string(LineClass c);

struct LineInfo {
  LineClass cls = LineClass::Other;
  SceneHeaderStyle scene = SceneHeaderStyle::None;  // set when cls == SceneHeader
  DialogueMarker dialogue = DialogueMarker::Other;  // set when cls == Dialogue
  StageDirectionMarker stage = StageDirectionMarker::None;  // set when cls == StageDirection
  bool role_cue = false;      // name line of a ROLE_NEWLINE pair
  int bold_pairs = 0;         // "**...**" pairs on the line
  bool bold() const { return bold_pairs > 0; }
};

/// Classifies one physical line. Priority: scene header > stage direction >
/// dialogue > blank > other; bold is an orthogonal flag. With a hint, a
/// category set to a concrete style only activates that style's detector,
/// while NONE/OTHER keep every detector active. A bare role-name line counts
/// as dialogue only when the hint says ROLE_NEWLINE.
LineInfo classify_line(std::string_view line, const FormatProfile* hint = nullptr);

/// Context-aware classification of a whole text: additionally pairs a
/// role-name line with the spoken line that follows it (ROLE_NEWLINE).
std::vector<LineInfo> classify_lines(const std::vector<std::string_view>& lines,
                                     const FormatProfile* hint = nullptr);

struct DetectOptions {
  std::size_t min_lines = 3;        // a style needs at least this many lines
  double min_fraction = 0.02;       // ...and this share of non-blank lines
  double policy_majority = 0.8;     // share of line gaps for SINGLE/DOUBLE
  std::size_t max_examples = 5;
};

FormatProfile detect_profile(std::string_view text, const DetectOptions& options = {});

/// Natural-language rendering of a profile for generation prompts.
/// Deterministic; mentions every field by its wire name.
std::string render_contract(const FormatProfile& profile);

struct StructuralFeatures {
  double scene_ratio = 0.0;
  double dialogue_ratio = 0.0;
  double blank_ratio = 0.0;
  double stage_ratio = 0.0;
  double bold_density = 0.0;

  std::array<double, 5> values() const {
    return {scene_ratio, dialogue_ratio, blank_ratio, stage_ratio, bold_density};
  }
  bool operator==(const StructuralFeatures&) const = default;
};

void to_json(nlohmann::json& j, const StructuralFeatures& f);
void from_json(const nlohmann::json& j, StructuralFeatures& f);

/// Line-class ratios over all physical lines, with the profile selecting the
/// active detectors. bold_density is bold pairs per line.
StructuralFeatures extract_features(std::string_view text, const FormatProfile& profile);

}  // namespace scriptbench::format
