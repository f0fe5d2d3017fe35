#include "scriptbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "scriptbench/error.hpp"

namespace scriptbench::stats {

using nlohmann::json;

std::string to_string(EffectBand band) {
  switch (band) {
    case EffectBand::Negligible: return "Negligible";
    case EffectBand::Small: return "Small";
    case EffectBand::Medium: return "Medium";
    case EffectBand::Large: return "Large";
  }
  return "Negligible";
}

EffectBand effect_band(double d) {
  const double a = std::abs(d);
  if (a < 0.2) return EffectBand::Negligible;
  if (a < 0.5) return EffectBand::Small;
  if (a < 0.8) return EffectBand::Medium;
  return EffectBand::Large;
}

// ---------------------------------------------------------------------------
// Descriptives

double mean(const std::vector<double>& v) {
  if (v.empty()) throw StatsError("mean of empty list");
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  // One refinement pass removes the rounding of the naive sum (constant data stays exact).
  double r = 0.0;
  for (double x : v) r += x - m;
  return m + r / n;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw StatsError("quantile of empty list");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Descriptives descriptives(const std::vector<double>& values) {
  if (values.empty()) throw StatsError("descriptives of empty list");
  Descriptives d;
  d.n = values.size();
  d.mean = mean(values);
  d.sd = sample_sd(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  d.min = *lo;
  d.max = *hi;
  d.iqr = quantile(values, 0.75) - quantile(values, 0.25);
  if (d.mean != 0.0) d.cv_percent = 100.0 * d.sd / d.mean;
  return d;
}

void to_json(json& j, const Descriptives& d) {
  j = json{{"n", d.n},     {"mean", d.mean}, {"sd", d.sd},
           {"min", d.min}, {"max", d.max},   {"iqr", d.iqr},
           {"cv_percent", d.cv_percent ? json(*d.cv_percent) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Distributions

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw StatsError("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) throw StatsError("t statistic is NaN");
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw StatsError("t quantile needs 0 < p < 1");
  if (!(df > 0)) throw StatsError("t distribution needs df > 0");
  return boost::math::quantile(boost::math::students_t(df), p);
}

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw StatsError("normal quantile needs 0 < p < 1");
  return boost::math::quantile(boost::math::normal(), p);
}

std::string format_p(double p) {
  if (p < 1e-3) return "<0.001";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", p);
  return buf;
}

// ---------------------------------------------------------------------------
// Paired tests

namespace {

struct DiffSummary {
  std::size_t n;
  double mean;
  double sd;
};

DiffSummary summarize(const std::vector<double>& diffs, const char* what) {
  if (diffs.size() < 2) throw StatsError(std::string(what) + " needs at least 2 values");
  DiffSummary s{diffs.size(), mean(diffs), sample_sd(diffs)};
  return s;
}

void require_variance(const DiffSummary& s, const char* what) {
  if (!(s.sd > 0.0)) throw StatsError(std::string(what) + " undefined: zero variance");
}

}  // namespace

double cohens_d(const std::vector<double>& diffs) {
  const auto s = summarize(diffs, "cohens_d");
  require_variance(s, "cohens_d");
  return s.mean / s.sd;
}

TTest paired_ttest(const std::vector<double>& diffs) {
  const auto s = summarize(diffs, "paired_ttest");
  require_variance(s, "paired_ttest");
  TTest r;
  r.df = static_cast<double>(s.n - 1);
  r.t = s.mean / (s.sd / std::sqrt(static_cast<double>(s.n)));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

Interval confidence_interval(const std::vector<double>& diffs) {
  const auto s = summarize(diffs, "confidence_interval");
  const double half = 1.96 * s.sd / std::sqrt(static_cast<double>(s.n));
  return {s.mean - half, s.mean + half};
}

Interval confidence_interval_t(const std::vector<double>& diffs) {
  const auto s = summarize(diffs, "confidence_interval_t");
  const double crit = student_t_quantile(0.975, static_cast<double>(s.n - 1));
  const double half = crit * s.sd / std::sqrt(static_cast<double>(s.n));
  return {s.mean - half, s.mean + half};
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk

namespace {

double poly(const double* c, int nord, double x) {
  double result = c[0];
  if (nord == 1) return result;
  double p = x * c[nord - 1];
  for (int j = nord - 2; j > 0; --j) p = (p + c[j]) * x;
  return result + p;
}

}  // namespace

ShapiroWilk shapiro_wilk(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < 3 || n > 5000) throw StatsError("shapiro_wilk needs 3 <= n <= 5000");
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 0.0)) throw StatsError("shapiro_wilk undefined: all values identical");

  static const double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
  static const double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static const double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static const double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static const double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static const double c6[] = {-0.4803, -0.082676, 0.0030302};
  static const double g[] = {-2.273, 0.459};

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half, 0.0);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W as the squared correlation between the ordered sample and the
  // antisymmetric coefficient vector.
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / an;
  double num = 0.0;
  double asq = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    num += a[i] * (x[n - 1 - i] - x[i]);
    asq += 2.0 * a[i] * a[i];
  }
  for (double v : x) ss += (v - xm) * (v - xm);
  double w = num * num / (asq * ss);
  w = std::min(w, 1.0);

  ShapiroWilk out;
  out.w = w;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;  // 6/pi
    constexpr double stqr = 1.04719755119660;  // asin(sqrt(3/4))
    out.p = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
    return out;
  }
  double w1 = std::log(1.0 - w);
  const double xx = std::log(an);
  double mu;
  double sigma;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (w1 >= gamma) {
      out.p = 1e-99;
      return out;
    }
    w1 = -std::log(gamma - w1);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    mu = poly(c5, 4, xx);
    sigma = std::exp(poly(c6, 3, xx));
  }
  out.p = 0.5 * std::erfc(((w1 - mu) / sigma) / std::sqrt(2.0));
  return out;
}

// ---------------------------------------------------------------------------
// Pairing

std::vector<SamplePair> align_pairs(const std::vector<ScoredSample>& a,
                                    const std::vector<ScoredSample>& b) {
  using Key = std::pair<std::string, int>;
  auto index = [](const std::vector<ScoredSample>& v, const char* side) {
    std::map<Key, const ScoredSample*> out;
    std::set<Key> seen;
    for (const auto& s : v) {
      Key k{s.film_id, s.sample_idx};
      if (!seen.insert(k).second) {
        throw InputError(std::string("align_pairs: duplicate key (") + s.film_id + ", " +
                         std::to_string(s.sample_idx) + ") in model " + side);
      }
      if (s.valid && s.judged) out.emplace(std::move(k), &s);
    }
    return out;
  };
  const auto ia = index(a, "A");
  const auto ib = index(b, "B");
  std::vector<SamplePair> pairs;
  for (const auto& [key, sa] : ia) {
    if (auto it = ib.find(key); it != ib.end()) pairs.push_back({sa, it->second});
  }
  return pairs;
}

PairedTestResult compare_metric(const std::vector<SamplePair>& pairs, const std::string& metric) {
  std::vector<double> va, vb, diffs;
  for (const auto& p : pairs) {
    auto ita = p.a->metrics.find(metric);
    auto itb = p.b->metrics.find(metric);
    if (ita == p.a->metrics.end() || itb == p.b->metrics.end()) continue;
    va.push_back(ita->second);
    vb.push_back(itb->second);
    diffs.push_back(ita->second - itb->second);
  }
  PairedTestResult r;
  r.metric_name = metric;
  r.n_pairs = diffs.size();
  if (diffs.size() < 2) throw StatsError("metric '" + metric + "': fewer than 2 pairs");
  r.mean_a = mean(va);
  r.mean_b = mean(vb);
  r.sd_a = sample_sd(va);
  r.sd_b = sample_sd(vb);
  r.mean_diff = mean(diffs);
  r.sd_diff = sample_sd(diffs);
  const auto tt = paired_ttest(diffs);
  r.t_stat = tt.t;
  r.df = tt.df;
  r.p_value = tt.p;
  r.cohens_d = cohens_d(diffs);
  r.band = effect_band(r.cohens_d);
  const auto ci = confidence_interval(diffs);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  const auto cit = confidence_interval_t(diffs);
  r.ci_t_low = cit.low;
  r.ci_t_high = cit.high;
  if (diffs.size() >= 3 && diffs.size() <= 5000) {
    const auto sw = shapiro_wilk(diffs);
    r.shapiro_w = sw.w;
    r.shapiro_p = sw.p;
    if (sw.p < 0.05) {
      r.warnings.push_back("differences deviate from normality (Shapiro-Wilk p < 0.05)");
    }
  } else {
    r.warnings.push_back("too few pairs for a normality check");
  }
  return r;
}

void to_json(json& j, const PairedTestResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j = json{{"metric_name", r.metric_name},
           {"n_pairs", r.n_pairs},
           {"mean_a", r.mean_a},
           {"mean_b", r.mean_b},
           {"sd_a", r.sd_a},
           {"sd_b", r.sd_b},
           {"mean_diff", r.mean_diff},
           {"sd_diff", r.sd_diff},
           {"ci_low", r.ci_low},
           {"ci_high", r.ci_high},
           {"ci_t_low", r.ci_t_low},
           {"ci_t_high", r.ci_t_high},
           {"t_stat", r.t_stat},
           {"df", r.df},
           {"p_value", r.p_value},
           {"p_display", format_p(r.p_value)},
           {"cohens_d", r.cohens_d},
           {"band", to_string(r.band)},
           {"shapiro_w", opt(r.shapiro_w)},
           {"shapiro_p", opt(r.shapiro_p)},
           {"warnings", r.warnings}};
}

void from_json(const json& j, PairedTestResult& r) {
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  r.metric_name = j.at("metric_name").get<std::string>();
  r.n_pairs = j.at("n_pairs").get<std::size_t>();
  r.mean_a = j.at("mean_a").get<double>();
  r.mean_b = j.at("mean_b").get<double>();
  r.sd_a = j.value("sd_a", 0.0);
  r.sd_b = j.value("sd_b", 0.0);
  r.mean_diff = j.at("mean_diff").get<double>();
  r.sd_diff = j.value("sd_diff", 0.0);
  r.ci_low = j.at("ci_low").get<double>();
  r.ci_high = j.at("ci_high").get<double>();
  r.ci_t_low = j.value("ci_t_low", 0.0);
  r.ci_t_high = j.value("ci_t_high", 0.0);
  r.t_stat = j.at("t_stat").get<double>();
  r.df = j.value("df", 0.0);
  r.p_value = j.at("p_value").get<double>();
  r.cohens_d = j.at("cohens_d").get<double>();
  r.band = effect_band(r.cohens_d);
  r.shapiro_w = opt("shapiro_w");
  r.shapiro_p = opt("shapiro_p");
  r.warnings = j.value("warnings", std::vector<std::string>{});
}

}  // namespace scriptbench::stats
