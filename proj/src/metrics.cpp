#include "scriptbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "scriptbench/error.hpp"
#include "scriptbench/text.hpp"

#ifndef SCRIPTBENCH_DATA_DIR
#define SCRIPTBENCH_DATA_DIR "data"
#endif

namespace scriptbench::metrics {

std::string to_string(TokenizerMode mode) {
  return mode == TokenizerMode::CjkWords ? "cjk_words" : "chars";
}

TokenizerMode tokenizer_mode_from_string(std::string_view s) {
  if (s == "cjk_words") return TokenizerMode::CjkWords;
  if (s == "chars") return TokenizerMode::Chars;
  throw ConfigError("unknown tokenizer mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Dictionary

Dictionary Dictionary::from_entries(const std::vector<std::pair<std::u32string, double>>& entries) {
  Dictionary d;
  double total = 0.0;
  for (const auto& [word, freq] : entries) {
    if (word.empty() || !(freq > 0.0)) continue;
    d.freq_[word] += freq;
    total += freq;
    d.max_len_ = std::max(d.max_len_, word.size());
  }
  d.log_total_ = std::log(std::max(total, 1.0));
  return d;
}

Dictionary Dictionary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dictionary " + path.string());
  std::vector<std::pair<std::u32string, double>> entries;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::string word;
    double freq = 0.0;
    if (!(ls >> word >> freq)) continue;
    entries.emplace_back(text::decode(word), freq);
  }
  return from_entries(entries);
}

double Dictionary::log_prob(std::u32string_view word) const {
  auto it = freq_.find(std::u32string(word));
  const double f = it == freq_.end() ? 1.0 : it->second;
  return std::log(f) - log_total_;
}

bool Dictionary::contains(std::u32string_view word) const {
  return freq_.count(std::u32string(word)) > 0;
}

std::filesystem::path default_dictionary_path() {
  if (const char* env = std::getenv("SCRIPTBENCH_DATA_DIR")) {
    return std::filesystem::path(env) / "dict" / "zh_words.txt";
  }
  return std::filesystem::path(SCRIPTBENCH_DATA_DIR) / "dict" / "zh_words.txt";
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

enum class CharKind { Space, Cjk, Word, Punct };

CharKind kind_of(char32_t cp) {
  if (text::is_space(cp)) return CharKind::Space;
  if (text::is_cjk(cp)) return CharKind::Cjk;
  if (text::is_ascii_alnum(cp) || cp == U'_') return CharKind::Word;
  if (cp < 0x80) return CharKind::Punct;
  // CJK symbols/punctuation, fullwidth forms, general punctuation, arrows/shapes
  if ((cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF) ||
      (cp >= 0x2000 && cp <= 0x2BFF) || cp == 0x0394) {
    return CharKind::Punct;
  }
  return CharKind::Word;
}

}  // namespace

Tokenizer Tokenizer::chars() { return Tokenizer(TokenizerMode::Chars, nullptr); }

Tokenizer Tokenizer::cjk_words(std::shared_ptr<const Dictionary> dictionary) {
  if (!dictionary) throw ConfigError("cjk_words tokenizer needs a dictionary");
  return Tokenizer(TokenizerMode::CjkWords, std::move(dictionary));
}

Tokenizer Tokenizer::cjk_words() {
  static std::once_flag once;
  static std::shared_ptr<const Dictionary> bundled;
  std::call_once(once, [] {
    bundled = std::make_shared<const Dictionary>(Dictionary::load(default_dictionary_path()));
  });
  return cjk_words(bundled);
}

void Tokenizer::segment_cjk(std::u32string_view run, std::vector<std::string>& out) const {
  const std::size_t n = run.size();
  const std::size_t max_len = dict_->max_word_length();
  // best[i]: best log-probability of segmenting run[i..n); next[i]: end of first word.
  std::vector<double> best(n + 1, 0.0);
  std::vector<std::size_t> next(n + 1, n);
  for (std::size_t i = n; i-- > 0;) {
    best[i] = -std::numeric_limits<double>::infinity();
    for (std::size_t len = 1; len <= max_len && i + len <= n; ++len) {
      const auto word = run.substr(i, len);
      if (len > 1 && !dict_->contains(word)) continue;
      const double score = dict_->log_prob(word) + best[i + len];
      // ">=" prefers the longer word on ties.
      if (score >= best[i]) {
        best[i] = score;
        next[i] = i + len;
      }
    }
  }
  for (std::size_t i = 0; i < n; i = next[i]) out.push_back(text::encode(run.substr(i, next[i] - i)));
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text_utf8) const {
  const std::u32string u = text::decode(text_utf8);
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < u.size()) {
    const CharKind k = kind_of(u[i]);
    std::size_t j = i + 1;
    switch (k) {
      case CharKind::Space:
        break;
      case CharKind::Punct:
        out.push_back(text::encode(std::u32string_view(u).substr(i, 1)));
        break;
      case CharKind::Word:
        while (j < u.size() && kind_of(u[j]) == CharKind::Word) ++j;
        out.push_back(text::encode(std::u32string_view(u).substr(i, j - i)));
        break;
      case CharKind::Cjk:
        while (j < u.size() && kind_of(u[j]) == CharKind::Cjk) ++j;
        if (mode_ == TokenizerMode::Chars) {
          for (std::size_t k2 = i; k2 < j; ++k2) {
            out.push_back(text::encode(std::u32string_view(u).substr(k2, 1)));
          }
        } else {
          segment_cjk(std::u32string_view(u).substr(i, j - i), out);
        }
        break;
    }
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text_utf8, TokenizerMode mode) {
  return mode == TokenizerMode::Chars ? Tokenizer::chars().tokenize(text_utf8)
                                      : Tokenizer::cjk_words().tokenize(text_utf8);
}

// ---------------------------------------------------------------------------
// ROUGE-L

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  // Intern tokens so the inner loop compares integers.
  std::unordered_map<std::string_view, std::uint32_t> ids;
  auto intern = [&](const std::vector<std::string>& v) {
    std::vector<std::uint32_t> out;
    out.reserve(v.size());
    for (const auto& t : v) {
      out.push_back(ids.emplace(t, static_cast<std::uint32_t>(ids.size())).first->second);
    }
    return out;
  };
  std::vector<std::uint32_t> x = intern(a);
  std::vector<std::uint32_t> y = intern(b);
  if (y.size() > x.size()) std::swap(x, y);

  std::vector<std::uint32_t> prev(y.size() + 1, 0);
  std::vector<std::uint32_t> cur(y.size() + 1, 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    const std::uint32_t xi = x[i - 1];
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = xi == y[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

RougeScore rouge_l(const std::vector<std::string>& generated,
                   const std::vector<std::string>& reference) {
  RougeScore s;
  s.lcs_len = lcs_length(generated, reference);
  s.precision = generated.empty() ? 0.0
                                  : static_cast<double>(s.lcs_len) /
                                        static_cast<double>(generated.size());
  s.recall = reference.empty() ? 0.0
                               : static_cast<double>(s.lcs_len) /
                                     static_cast<double>(reference.size());
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

// ---------------------------------------------------------------------------

double structural_similarity(const format::StructuralFeatures& generated,
                             const format::StructuralFeatures& reference) {
  const auto g = generated.values();
  const auto r = reference.values();
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    diff += std::abs(g[k] - r[k]);
    norm += std::abs(r[k]);
  }
  const double s = 1.0 - diff / (norm + kStructEpsilon);
  return std::clamp(s, 0.0, 1.0);
}

void CompositeWeights::validate() const {
  if (rouge < 0 || structure < 0 || overall < 0 ||
      std::abs(rouge + structure + overall - 1.0) > 1e-9) {
    throw ConfigError("composite weights must be non-negative and sum to 1");
  }
}

double composite(double rouge_f1, double struct_sim, double overall_0_100,
                 const CompositeWeights& weights) {
  weights.validate();
  auto check = [](double v, double hi, const char* name) {
    if (!(v >= 0.0 && v <= hi)) {
      throw InputError(std::string("composite: ") + name + " out of range");
    }
  };
  check(rouge_f1, 1.0, "rouge_f1");
  check(struct_sim, 1.0, "struct_sim");
  check(overall_0_100, 100.0, "overall");
  return weights.rouge * rouge_f1 + weights.structure * struct_sim +
         weights.overall * overall_0_100 / 100.0;
}

}  // namespace scriptbench::metrics
