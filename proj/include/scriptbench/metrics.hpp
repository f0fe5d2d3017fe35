#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scriptbench/format.hpp"

namespace scriptbench::metrics {

enum class TokenizerMode { CjkWords, Chars };
std::string to_string(TokenizerMode mode);
TokenizerMode tokenizer_mode_from_string(std::string_view s);

/// Dictionary of "word frequency" lines (jieba dict.txt layout, extra
/// columns ignored).
class Dictionary {
 public:
  static Dictionary load(const std::filesystem::path& path);
  static Dictionary from_entries(const std::vector<std::pair<std::u32string, double>>& entries);

  /// log(freq / total); unknown words score as frequency 1.
  double log_prob(std::u32string_view word) const;
  bool contains(std::u32string_view word) const;
  std::size_t max_word_length() const { return max_len_; }
  std::size_t size() const { return freq_.size(); }

 private:
  std::unordered_map<std::u32string, double> freq_;
  double log_total_ = 0.0;
  std::size_t max_len_ = 1;
};

/// Path of the bundled dictionary snapshot (data/dict/zh_words.txt).
std::filesystem::path default_dictionary_path();

class Tokenizer {
 public:
  /// Per-character CJK tokens; Latin/digit runs stay whole.
  static Tokenizer chars();
  /// Max-probability dictionary segmentation of CJK runs.
  static Tokenizer cjk_words(std::shared_ptr<const Dictionary> dictionary);
  static Tokenizer cjk_words();  // bundled snapshot

  std::vector<std::string> tokenize(std::string_view text) const;
  TokenizerMode mode() const { return mode_; }

 private:
  Tokenizer(TokenizerMode mode, std::shared_ptr<const Dictionary> dict)
      : mode_(mode), dict_(std::move(dict)) {}
  void segment_cjk(std::u32string_view run, std::vector<std::string>& out) const;

  TokenizerMode mode_;
  std::shared_ptr<const Dictionary> dict_;
};

std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode);

/// Exact LCS length; O(|a|*|b|) time, O(min(|a|,|b|)) memory.
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t lcs_len = 0;
};

RougeScore rouge_l(const std::vector<std::string>& generated,
                   const std::vector<std::string>& reference);

inline constexpr double kStructEpsilon = 1e-6;

/// 1 - sum|gen - ref| / (sum|ref| + eps), clamped below at 0.
double structural_similarity(const format::StructuralFeatures& generated,
                             const format::StructuralFeatures& reference);

struct CompositeWeights {
  double rouge = 0.4;
  double structure = 0.3;
  double overall = 0.3;
  void validate() const;
};

/// Weighted sum of ROUGE-L F1, structural similarity and the judge's 0-100
/// overall score. Out-of-range inputs throw InputError.
double composite(double rouge_f1, double struct_sim, double overall_0_100,
                 const CompositeWeights& weights = {});

}  // namespace scriptbench::metrics
