#include "scriptbench/jsonutil.hpp"

#include <openssl/evp.h>

#include <fstream>

#include "scriptbench/corpus.hpp"
#include "scriptbench/error.hpp"
#include "scriptbench/text.hpp"

namespace scriptbench::jsonutil {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// End index (exclusive) of the object opening at `open`, honoring strings.
std::optional<std::size_t> matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::nullopt;
}

}  // namespace

std::optional<json> extract_first_object(std::string_view s) {
  for (std::size_t pos = s.find('{'); pos != std::string_view::npos; pos = s.find('{', pos + 1)) {
    const auto end = matching_brace(s, pos);
    if (!end) continue;
    json parsed = json::parse(s.substr(pos, *end - pos), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  if (!fs::exists(path)) return out;
  const std::string content = corpus::read_file(path);
  const auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    json parsed = json::parse(lines[i], nullptr, false);
    if (parsed.is_discarded()) {
      const bool torn_tail = i + 1 == lines.size() && content.back() != '\n';
      if (torn_tail) break;
      throw InputError(path.string() + ": malformed JSONL line " + std::to_string(i + 1));
    }
    out.push_back(std::move(parsed));
  }
  return out;
}

void append_jsonl(const fs::path& path, const json& record) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  out << record.dump() << '\n';
  out.flush();
}

void repair_jsonl(const fs::path& path) {
  if (!fs::exists(path)) return;
  const std::string content = corpus::read_file(path);
  if (content.empty() || content.back() == '\n') return;
  const std::size_t cut = content.rfind('\n');
  corpus::write_file(path, cut == std::string::npos ? std::string() : content.substr(0, cut + 1));
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace scriptbench::jsonutil
