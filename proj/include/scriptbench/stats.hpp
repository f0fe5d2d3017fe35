#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scriptbench::stats {

enum class EffectBand { Negligible, Small, Medium, Large };
std::string to_string(EffectBand band);

/// |d| < 0.2 Negligible, < 0.5 Small, < 0.8 Medium, otherwise Large.
EffectBand effect_band(double d);

struct Descriptives {
  std::size_t n = 0;
  double mean = 0, sd = 0, min = 0, max = 0, iqr = 0;
  std::optional<double> cv_percent;  // empty when mean == 0
};

void to_json(nlohmann::json& j, const Descriptives& d);

/// Sample SD (n-1), IQR by linear interpolation between order statistics.
Descriptives descriptives(const std::vector<double>& values);

/// Quantile by linear interpolation (numpy's default), q in [0, 1].
double quantile(std::vector<double> values, double q);

double mean(const std::vector<double>& values);
double sample_sd(const std::vector<double>& values);

/// mean(diffs) / sd(diffs). Throws StatsError for n < 2 or zero variance.
double cohens_d(const std::vector<double>& diffs);

struct TTest {
  double t = 0;
  double p = 1;
  double df = 0;
};

TTest paired_ttest(const std::vector<double>& diffs);

struct Interval {
  double low = 0;
  double high = 0;
};

/// mean ± 1.96 * sd / sqrt(n)
Interval confidence_interval(const std::vector<double>& diffs);
/// mean ± t_{0.975, n-1} * sd / sqrt(n)
Interval confidence_interval_t(const std::vector<double>& diffs);

struct ShapiroWilk {
  double w = 1;
  double p = 1;
};

/// Royston (1995) W and p-value; 3 <= n <= 5000.
ShapiroWilk shapiro_wilk(std::vector<double> values);

// Distribution helpers, exposed for testing.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double df);
double student_t_quantile(double p, double df);
double normal_cdf(double z);
double normal_quantile(double p);

/// "<0.001" below 1e-3, otherwise three decimals.
std::string format_p(double p);

// ---------------------------------------------------------------------------
// Pairing

/// Per-sample values a paired comparison can draw on.
struct ScoredSample {
  std::string film_id;
  int sample_idx = 0;
  bool valid = false;
  bool judged = false;
  std::map<std::string, double> metrics;
};

struct SamplePair {
  const ScoredSample* a = nullptr;
  const ScoredSample* b = nullptr;
};

/// Inner join on (film_id, sample_idx) of valid, judged samples, ordered by
/// key. Duplicate keys inside one list throw InputError.
std::vector<SamplePair> align_pairs(const std::vector<ScoredSample>& a,
                                    const std::vector<ScoredSample>& b);

struct PairedTestResult {
  std::string metric_name;
  std::size_t n_pairs = 0;
  double mean_a = 0, mean_b = 0, sd_a = 0, sd_b = 0;
  double mean_diff = 0;
  double sd_diff = 0;
  double ci_low = 0, ci_high = 0;      // 1.96 multiplier
  double ci_t_low = 0, ci_t_high = 0;  // t multiplier
  double t_stat = 0;
  double df = 0;
  double p_value = 1;
  double cohens_d = 0;
  EffectBand band = EffectBand::Negligible;
  std::optional<double> shapiro_w;
  std::optional<double> shapiro_p;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const PairedTestResult& r);
void from_json(const nlohmann::json& j, PairedTestResult& r);

/// Full paired comparison of `metric` over aligned pairs (A minus B).
/// Throws StatsError when fewer than two pairs or zero-variance differences.
PairedTestResult compare_metric(const std::vector<SamplePair>& pairs, const std::string& metric);

}  // namespace scriptbench::stats
