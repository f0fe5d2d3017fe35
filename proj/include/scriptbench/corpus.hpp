#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace scriptbench::corpus {

/// One script in the dataset index. Paths are stored as written (usually
/// relative to the directory holding index.jsonl).
struct FilmRecord {
  std::string film_id;
  std::string title;
  std::optional<int> year;
  std::optional<std::string> genre;
  std::string upper_path;
  std::string lower_path;
  std::size_t upper_chars = 0;
  std::size_t lower_chars = 0;
  std::string profile_path;
  std::string contract_path;

  bool operator==(const FilmRecord&) const = default;
};

void to_json(nlohmann::json& j, const FilmRecord& r);
void from_json(const nlohmann::json& j, FilmRecord& r);

struct CleanOptions {
  /// "utf-8" (default) or any encoding name iconv understands, e.g. "GB18030".
  std::string encoding = "utf-8";
  /// ECMAScript regexes; a line matching one of them in full is removed.
  std::vector<std::string> noise_patterns = default_noise_patterns();

  static std::vector<std::string> default_noise_patterns();
};

/// Decodes, strips a BOM, normalizes CRLF/CR to LF and drops noise lines.
/// Idempotent on its own output.
std::string clean_text(std::string_view raw, const CleanOptions& options = {});

struct Halves {
  std::string upper;
  std::string lower;
};

/// Splits at the blank-line boundary nearest to ratio * length (in code
/// points), falling back to the nearest line start and then the raw index.
/// upper + lower always reproduces `text`.
Halves split_halves(std::string_view text, double ratio = 0.5);

/// Code-point index where split_halves cuts.
std::size_t split_point(std::string_view text, double ratio = 0.5);

enum class DropReason { None, Incomplete, TooShort };
std::string to_string(DropReason reason);

struct FilterDecision {
  bool keep = true;
  DropReason reason = DropReason::None;
};

struct FilterOptions {
  std::size_t min_chars = 1000;
};

/// Reads both halves (relative paths resolve against `base_dir`) and
/// refreshes the record's char counts. Missing files throw IoError.
FilterDecision quality_filter(FilmRecord& record, const std::filesystem::path& base_dir,
                              const FilterOptions& options = {});

/// Serializes records sorted by film_id, one JSON object per line.
/// Duplicate ids throw InputError.
std::string serialize_index(std::vector<FilmRecord> records);
std::vector<FilmRecord> parse_index(std::string_view jsonl);

void build_index(const std::vector<FilmRecord>& records, const std::filesystem::path& path);
std::vector<FilmRecord> read_index(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace scriptbench::corpus
