#include <doctest.h>

#include <filesystem>
#include <random>

#include "scriptbench/corpus.hpp"
#include "scriptbench/error.hpp"
#include "scriptbench/text.hpp"

using namespace scriptbench;
using namespace scriptbench::corpus;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("scriptbench_corpus_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string repeat(const std::string& s, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += s;
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("clean_text normalizes line endings and BOM") {
    CHECK(clean_text("A\r\nB") == "A\nB");
    CHECK(clean_text("A\rB") == "A\nB");
    CHECK(clean_text("\xEF\xBB\xBF" "A\nB") == "A\nB");
    const std::string clean = "Scene 1\nMAYA: Hello.\n";
    CHECK(clean_text(clean) == clean);
  }

  TEST_CASE("clean_text drops noise lines") {
    const std::string raw = "A\n- 12 -\nPage 3/40\n\xE7\xAC\xAC 4 \xE9\xA1\xB5\n[Transcriber: note]\nB\n";
    CHECK(clean_text(raw) == "A\nB\n");
    CleanOptions none;
    none.noise_patterns.clear();
    CHECK(clean_text("A\n- 12 -\n", none) == "A\n- 12 -\n");
  }

  TEST_CASE("clean_text is idempotent") {
    std::mt19937 rng(7);
    const std::vector<std::string> parts{"A", "\r\n", "\r", "\n", "- 3 -", "Page 9", " ",
                                         "\xE4\xBD\xA0", "\xEF\xBB\xBF"};
    for (int i = 0; i < 300; ++i) {
      std::string raw = i % 2 ? "\xEF\xBB\xBF" : "";
      for (int k = 0; k < 20; ++k) raw += parts[rng() % parts.size()];
      if (!text::is_valid_utf8(raw)) continue;
      const std::string once = clean_text(raw);
      CHECK(clean_text(once) == once);
    }
  }

  TEST_CASE("clean_text rejects undecodable bytes") {
    CHECK_THROWS_AS(clean_text("ok\xFFno"), EncodingError);
  }

  TEST_CASE("clean_text decodes a declared legacy encoding") {
    CleanOptions gb;
    gb.encoding = "GB18030";
    CHECK(clean_text("\xC4\xE3\xBA\xC3", gb) == "\xE4\xBD\xA0\xE5\xA5\xBD");  // 你好
  }

  TEST_CASE("split_halves examples") {
    // blank line exactly at the midpoint
    auto h = split_halves("abcd\n\nefg\n");
    CHECK(text::char_count(h.upper) == 5);
    CHECK(text::char_count(h.lower) == 5);

    // no blank lines: nearest line break
    const std::string t = "aaaaaaaa\nbbbb\ncccc\n";
    auto l = split_halves(t);
    CHECK(l.upper == "aaaaaaaa\n");
    CHECK(l.upper + l.lower == t);

    // single line: raw midpoint
    auto r = split_halves("abcdefghij");
    CHECK(r.upper == "abcde");
    CHECK(r.lower == "fghij");

    CHECK_THROWS_AS(split_halves(""), InputError);
    CHECK_THROWS_AS(split_halves("abc", 0.0), InputError);
    CHECK_THROWS_AS(split_halves("abc", 1.0), InputError);
  }

  TEST_CASE("split_halves concatenation identity and window property") {
    std::mt19937 rng(11);
    const std::vector<std::string> tokens{"x", "\xE5\x9C\xBA", " ", "\n", "\n\n", "MAYA: hi.", "\xCE\x94"};
    for (int i = 0; i < 500; ++i) {
      std::string t;
      const int len = 1 + static_cast<int>(rng() % 80);
      for (int k = 0; k < len; ++k) t += tokens[rng() % tokens.size()];
      const double ratio = 0.1 + 0.8 * (rng() % 1000) / 1000.0;
      auto h = split_halves(t, ratio);
      CHECK(h.upper + h.lower == t);

      // a blank line near the target means the cut lands near the target
      const auto u = text::decode(t);
      const double target = ratio * static_cast<double>(u.size());
      const double tol = std::max(1.0, 0.02 * static_cast<double>(u.size()));
      bool blank_near = false;
      for (std::size_t p = 1; p + 1 < u.size(); ++p) {
        if (u[p - 1] == U'\n' && u[p] == U'\n' && std::abs(static_cast<double>(p) - target) <= tol - 1) {
          blank_near = true;
        }
      }
      if (blank_near) {
        CHECK(std::abs(static_cast<double>(split_point(t, ratio)) - target) <= tol);
      }
    }
  }

  TEST_CASE("quality_filter") {
    const fs::path d = scratch_dir("filter");
    write_file(d / "u.txt", repeat("a", 21322));
    write_file(d / "l.txt", repeat("b", 17078));
    write_file(d / "e.txt", "");
    write_file(d / "s.txt", repeat("c", 500));

    FilmRecord keep{"f", "F", 2015, std::nullopt, "u.txt", "l.txt", 0, 0, "", ""};
    auto k = quality_filter(keep, d);
    CHECK(k.keep);
    CHECK(keep.upper_chars == 21322);
    CHECK(keep.lower_chars == 17078);

    FilmRecord empty{"g", "G", std::nullopt, std::nullopt, "u.txt", "e.txt", 0, 0, "", ""};
    auto e = quality_filter(empty, d);
    CHECK_FALSE(e.keep);
    CHECK(e.reason == DropReason::Incomplete);

    FilmRecord shorty{"h", "H", std::nullopt, std::nullopt, "s.txt", "l.txt", 0, 0, "", ""};
    auto s = quality_filter(shorty, d);
    CHECK_FALSE(s.keep);
    CHECK(s.reason == DropReason::TooShort);
    CHECK(quality_filter(shorty, d, FilterOptions{400}).keep);

    FilmRecord missing{"m", "M", std::nullopt, std::nullopt, "nope.txt", "l.txt", 0, 0, "", ""};
    CHECK_THROWS_AS(quality_filter(missing, d), IoError);
  }

  TEST_CASE("index round-trip, ordering and duplicates") {
    std::vector<FilmRecord> recs;
    for (int i = 52; i >= 0; --i) {
      recs.push_back({"film" + std::to_string(100 + i), "T" + std::to_string(i),
                      i % 2 ? std::optional<int>(1990 + i) : std::nullopt,
                      i % 3 ? std::optional<std::string>("drama") : std::nullopt,
                      "films/u.txt", "films/l.txt", 1000u + i, 900u + i, "p.json", "c.txt"});
    }
    const std::string s = serialize_index(recs);
    CHECK(text::split_lines(s).size() == 53);
    auto back = parse_index(s);
    REQUIRE(back.size() == 53);
    CHECK(back.front().film_id == "film100");
    std::sort(recs.begin(), recs.end(),
              [](const FilmRecord& a, const FilmRecord& b) { return a.film_id < b.film_id; });
    CHECK(back == recs);

    const nlohmann::json first = nlohmann::json::parse(std::string(text::split_lines(s)[0]));
    for (const char* key : {"film_id", "title", "year", "genre", "upper_path", "lower_path",
                            "upper_chars", "lower_chars", "profile_path", "contract_path"}) {
      CHECK(first.contains(key));
    }
    CHECK(first.size() == 10);

    CHECK(serialize_index({}).empty());
    recs.push_back(recs.front());
    CHECK_THROWS_AS(serialize_index(recs), InputError);

    const fs::path d = scratch_dir("index");
    build_index({}, d / "empty.jsonl");
    CHECK(fs::exists(d / "empty.jsonl"));
    CHECK(read_index(d / "empty.jsonl").empty());
    recs.pop_back();
    build_index(recs, d / "index.jsonl");
    CHECK(read_index(d / "index.jsonl") == back);
  }
}
