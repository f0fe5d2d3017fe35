#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. All "character" counts in this project are Unicode code
// points, whitespace and newlines included.
namespace scriptbench::text {

// Throws EncodingError naming the first invalid byte.
void validate_utf8(std::string_view s);
bool is_valid_utf8(std::string_view s);

std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

std::size_t char_count(std::string_view s);

// Byte offset of the code point with index `char_index` (clamped to size()).
std::size_t byte_offset(std::string_view s, std::size_t char_index);

std::string_view head_chars(std::string_view s, std::size_t n);
std::string_view tail_chars(std::string_view s, std::size_t n);

// Lines separated by '\n'. A trailing '\n' does not open an extra line and
// the empty string has zero lines.
std::vector<std::string_view> split_lines(std::string_view s);

bool is_space(char32_t cp);
bool is_cjk(char32_t cp);
bool is_ascii_alnum(char32_t cp);

std::u32string trim(std::u32string_view s);
std::string trim(std::string_view s);

std::string ascii_lower(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace scriptbench::text
