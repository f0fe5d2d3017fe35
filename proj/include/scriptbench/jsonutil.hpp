#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scriptbench::jsonutil {

/// Returns the first balanced {...} span in `text` that parses as a JSON
/// object, skipping code fences and surrounding prose.
std::optional<nlohmann::json> extract_first_object(std::string_view text);

/// Reads a JSONL file. A trailing line that fails to parse is treated as an
/// interrupted write and ignored; malformed lines elsewhere throw InputError.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Appends one compact JSON line and flushes it.
void append_jsonl(const std::filesystem::path& path, const nlohmann::json& record);

/// Rewrites `path` dropping a torn final line, so appends start on a fresh line.
void repair_jsonl(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

}  // namespace scriptbench::jsonutil
