#include "scriptbench/corpus.hpp"

#include <iconv.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "scriptbench/error.hpp"
#include "scriptbench/text.hpp"

namespace scriptbench::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const FilmRecord& r) {
  j = json{{"film_id", r.film_id},
           {"title", r.title},
           {"year", r.year ? json(*r.year) : json(nullptr)},
           {"genre", r.genre ? json(*r.genre) : json(nullptr)},
           {"upper_path", r.upper_path},
           {"lower_path", r.lower_path},
           {"upper_chars", r.upper_chars},
           {"lower_chars", r.lower_chars},
           {"profile_path", r.profile_path},
           {"contract_path", r.contract_path}};
}

void from_json(const json& j, FilmRecord& r) {
  r.film_id = j.at("film_id").get<std::string>();
  r.title = j.at("title").get<std::string>();
  r.year = j.contains("year") && !j["year"].is_null() ? std::optional<int>(j["year"].get<int>())
                                                      : std::nullopt;
  r.genre = j.contains("genre") && !j["genre"].is_null()
                ? std::optional<std::string>(j["genre"].get<std::string>())
                : std::nullopt;
  r.upper_path = j.at("upper_path").get<std::string>();
  r.lower_path = j.at("lower_path").get<std::string>();
  r.upper_chars = j.at("upper_chars").get<std::size_t>();
  r.lower_chars = j.at("lower_chars").get<std::size_t>();
  r.profile_path = j.value("profile_path", "");
  r.contract_path = j.value("contract_path", "");
}

std::vector<std::string> CleanOptions::default_noise_patterns() {
  return {
      R"(\s*-\s*\d+\s*-\s*)",                    // "- 12 -"
      R"(\s*(Page|PAGE|page)\s+\d+(\s*/\s*\d+)?\s*)",  // "Page 3", "Page 3/40"
      "\\s*\xE7\xAC\xAC\\s*\\d+\\s*\xE9\xA1\xB5\\s*",  // 第 12 页
      R"(\s*\[(Transcriber|TN|transcriber)[^\]]*\]\s*)",
  };
}

namespace {

std::string convert_to_utf8(std::string_view raw, const std::string& encoding) {
  iconv_t cd = iconv_open("UTF-8", encoding.c_str());
  if (cd == reinterpret_cast<iconv_t>(-1)) {
    throw InputError("unsupported encoding '" + encoding + "'");
  }
  std::string out;
  std::string in(raw);
  char* in_ptr = in.data();
  std::size_t in_left = in.size();
  std::vector<char> buffer(4096);
  while (in_left > 0) {
    char* out_ptr = buffer.data();
    std::size_t out_left = buffer.size();
    const std::size_t rc = iconv(cd, &in_ptr, &in_left, &out_ptr, &out_left);
    out.append(buffer.data(), buffer.size() - out_left);
    if (rc == static_cast<std::size_t>(-1)) {
      if (errno == E2BIG) continue;
      const std::size_t offset = static_cast<std::size_t>(in_ptr - in.data());
      iconv_close(cd);
      throw EncodingError("undecodable " + encoding + " input", offset);
    }
  }
  iconv_close(cd);
  return out;
}

bool is_utf8_name(const std::string& encoding) {
  const std::string e = text::ascii_lower(encoding);
  return e == "utf-8" || e == "utf8" || e.empty();
}

std::string clean_pass(const std::string& decoded, const std::vector<std::regex>& noise) {
  std::string_view in(decoded);
  while (in.size() >= 3 && in.substr(0, 3) == "\xEF\xBB\xBF") in.remove_prefix(3);

  std::string normalized;
  normalized.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '\r') {
      normalized.push_back('\n');
      if (i + 1 < in.size() && in[i + 1] == '\n') ++i;
    } else {
      normalized.push_back(in[i]);
    }
  }
  if (noise.empty()) return normalized;

  std::string out;
  out.reserve(normalized.size());
  std::size_t start = 0;
  while (start <= normalized.size()) {
    std::size_t nl = normalized.find('\n', start);
    const bool last = nl == std::string::npos;
    if (last) nl = normalized.size();
    const std::string line = normalized.substr(start, nl - start);
    const bool drop = !line.empty() && std::any_of(noise.begin(), noise.end(), [&](const auto& re) {
      return std::regex_match(line, re);
    });
    if (!drop) {
      out += line;
      if (!last) out.push_back('\n');
    }
    if (last) break;
    start = nl + 1;
  }
  return out;
}

}  // namespace

std::string clean_text(std::string_view raw, const CleanOptions& options) {
  std::string decoded;
  if (is_utf8_name(options.encoding)) {
    if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);
    text::validate_utf8(raw);
    decoded = std::string(raw);
  } else {
    decoded = convert_to_utf8(raw, options.encoding);
    if (decoded.size() >= 3 && decoded.compare(0, 3, "\xEF\xBB\xBF") == 0) decoded.erase(0, 3);
  }
  std::vector<std::regex> noise;
  noise.reserve(options.noise_patterns.size());
  for (const auto& pattern : options.noise_patterns) {
    try {
      noise.emplace_back(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ConfigError("bad noise pattern '" + pattern + "': " + e.what());
    }
  }

  // Dropping a line or a BOM can expose another one, so repeat to a fixed point.
  std::string current = std::move(decoded);
  for (;;) {
    std::string next = clean_pass(current, noise);
    if (next == current) return next;
    current = std::move(next);
  }
}

std::size_t split_point(std::string_view text_utf8, double ratio) {
  if (text_utf8.empty()) throw InputError("split_halves: empty text");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split_halves: ratio must be in (0, 1)");

  const std::u32string t = text::decode(text_utf8);
  const std::size_t n = t.size();
  const double target = ratio * static_cast<double>(n);

  // Line starts and whether each line is blank.
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] == U'\n' && i + 1 <= n) starts.push_back(i + 1);
  }
  auto line_blank = [&](std::size_t k) {
    const std::size_t b = starts[k];
    const std::size_t e = k + 1 < starts.size() ? starts[k + 1] - 1 : n;
    for (std::size_t i = b; i < e; ++i) {
      if (!text::is_space(t[i])) return false;
    }
    return true;
  };

  const double window = std::max(1.0, 0.05 * static_cast<double>(n));
  std::optional<std::size_t> best_blank;
  std::optional<std::size_t> best_line;
  auto closer = [&](std::size_t cand, const std::optional<std::size_t>& cur) {
    if (!cur) return true;
    return std::abs(static_cast<double>(cand) - target) <
           std::abs(static_cast<double>(*cur) - target);
  };
  for (std::size_t k = 1; k < starts.size(); ++k) {
    const std::size_t pos = starts[k];
    if (pos == 0 || pos >= n) continue;
    if (closer(pos, best_line)) best_line = pos;
    const bool blank_boundary = line_blank(k) || line_blank(k - 1);
    if (blank_boundary && std::abs(static_cast<double>(pos) - target) <= window &&
        closer(pos, best_blank)) {
      best_blank = pos;
    }
  }
  if (best_blank) return *best_blank;
  if (best_line) return *best_line;
  return static_cast<std::size_t>(std::floor(target));
}

Halves split_halves(std::string_view text_utf8, double ratio) {
  const std::size_t at = split_point(text_utf8, ratio);
  const std::size_t byte = text::byte_offset(text_utf8, at);
  return Halves{std::string(text_utf8.substr(0, byte)), std::string(text_utf8.substr(byte))};
}

std::string to_string(DropReason reason) {
  switch (reason) {
    case DropReason::None: return "none";
    case DropReason::Incomplete: return "incomplete";
    case DropReason::TooShort: return "too_short";
  }
  return "unknown";
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

FilterDecision quality_filter(FilmRecord& record, const fs::path& base_dir,
                              const FilterOptions& options) {
  record.upper_chars = text::char_count(read_file(resolve(base_dir, record.upper_path)));
  record.lower_chars = text::char_count(read_file(resolve(base_dir, record.lower_path)));
  if (record.upper_chars == 0 || record.lower_chars == 0) {
    return {false, DropReason::Incomplete};
  }
  if (record.upper_chars < options.min_chars || record.lower_chars < options.min_chars) {
    return {false, DropReason::TooShort};
  }
  return {true, DropReason::None};
}

std::string serialize_index(std::vector<FilmRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const FilmRecord& a, const FilmRecord& b) { return a.film_id < b.film_id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].film_id == records[i - 1].film_id) {
      throw InputError("duplicate film_id '" + records[i].film_id + "'");
    }
  }
  std::string out;
  for (const auto& r : records) {
    out += json(r).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<FilmRecord> parse_index(std::string_view jsonl) {
  std::vector<FilmRecord> records;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    FilmRecord r;
    try {
      r = json::parse(line).get<FilmRecord>();
    } catch (const json::exception& e) {
      throw InputError("index line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(r.film_id).second) {
      throw InputError("duplicate film_id '" + r.film_id + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

void build_index(const std::vector<FilmRecord>& records, const fs::path& path) {
  write_file(path, serialize_index(records));
}

std::vector<FilmRecord> read_index(const fs::path& path) { return parse_index(read_file(path)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace scriptbench::corpus
