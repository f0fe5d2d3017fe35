#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scriptbench/error.hpp"
#include "scriptbench/stats.hpp"

using namespace scriptbench;
using namespace scriptbench::stats;

namespace {

bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-300;
}

// n values with mean `m` and sample SD `s` exactly (alternating signs, n even).
std::vector<double> with_moments(std::size_t n, double m, double s) {
  const double c = s * std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = m + (i % 2 ? c : -c);
  return v;
}

ScoredSample scored(const std::string& film, int idx, bool valid, bool judged,
                    std::map<std::string, double> metrics = {}) {
  return ScoredSample{film, idx, valid, judged, std::move(metrics)};
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("effect bands at the printed values and thresholds") {
    CHECK(effect_band(-0.43) == EffectBand::Small);
    CHECK(effect_band(0.46) == EffectBand::Small);
    CHECK(effect_band(1.04) == EffectBand::Large);
    CHECK(effect_band(0.84) == EffectBand::Large);
    CHECK(effect_band(0.2) == EffectBand::Small);
    CHECK(effect_band(0.19999) == EffectBand::Negligible);
    CHECK(effect_band(0.5) == EffectBand::Medium);
    CHECK(effect_band(-0.8) == EffectBand::Large);
    for (double t : {0.2, 0.5, 0.8}) {
      for (double sign : {1.0, -1.0}) {
        CHECK(effect_band(sign * (t - 1e-9)) != effect_band(sign * (t + 1e-9)));
      }
    }
    CHECK(to_string(EffectBand::Large) == "Large");
  }

  TEST_CASE("descriptives") {
    auto d = descriptives({1, 2, 3, 4});
    CHECK(d.n == 4);
    CHECK(d.mean == 2.5);
    CHECK(d.sd == doctest::Approx(1.2909944487).epsilon(1e-9));
    CHECK(d.iqr == 1.5);
    CHECK(d.min == 1);
    CHECK(d.max == 4);
    REQUIRE(d.cv_percent);
    CHECK(*d.cv_percent == doctest::Approx(100 * 1.2909944487 / 2.5));

    auto c = descriptives({0.7, 0.7, 0.7});
    CHECK(c.sd == 0.0);
    CHECK(c.iqr == 0.0);
    CHECK(*c.cv_percent == 0.0);

    auto z = descriptives({-1, 1});
    CHECK_FALSE(z.cv_percent.has_value());

    auto g = descriptives(with_moments(144, 0.4958, 0.0763));
    CHECK(std::round(*g.cv_percent * 10) / 10 == 15.4);

    CHECK_THROWS_AS(descriptives({}), StatsError);
    CHECK(quantile({1, 2, 3, 4}, 0.25) == 1.75);
    CHECK(quantile({5}, 0.9) == 5);
  }

  TEST_CASE("hand-computed paired statistics for [1,2,3]") {
    const std::vector<double> d{1, 2, 3};
    CHECK(mean(d) == 2.0);
    CHECK(sample_sd(d) == 1.0);
    CHECK(cohens_d(d) == 2.0);
    auto t = paired_ttest(d);
    CHECK(std::abs(t.t - 3.4641) <= 1e-3);
    CHECK(t.df == 2);
    auto ci = confidence_interval(d);
    CHECK(std::abs(ci.low - 0.8684) <= 1e-3);
    CHECK(std::abs(ci.high - 3.1316) <= 1e-3);
    CHECK(ci.high - ci.low == doctest::Approx(2 * 1.96 / std::sqrt(3.0)).epsilon(1e-14));
  }

  TEST_CASE("zero variance and short inputs") {
    CHECK_THROWS_AS(cohens_d({0, 0, 0}), StatsError);
    CHECK_THROWS_AS(paired_ttest({1, 1}), StatsError);
    CHECK_THROWS_AS(cohens_d({1}), StatsError);
    auto c = confidence_interval({0.3, 0.3, 0.3});
    CHECK(c.low == doctest::Approx(0.3));
    CHECK(c.high == doctest::Approx(0.3));
    CHECK_THROWS_AS(shapiro_wilk({1, 2}), StatsError);
    CHECK_THROWS_AS(shapiro_wilk({4, 4, 4}), StatsError);
  }

  TEST_CASE("symmetric diffs give t = 0 and p = 1") {
    auto t = paired_ttest({-2, -1, 1, 2});
    CHECK(t.t == 0.0);
    CHECK(t.p == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("frozen scipy fixtures: t, p, Shapiro-Wilk") {
    for (const auto& f : oracles::stats_fixtures()) {
      INFO(f.name);
      auto t = paired_ttest(f.values);
      CHECK(rel_close(t.t, f.t, 1e-10));
      CHECK(rel_close(t.p, f.p, 1e-8));
      auto sw = shapiro_wilk(f.values);
      CHECK(std::abs(sw.w - f.shapiro_w) <= 1e-6);
      CHECK(std::abs(sw.p - f.shapiro_p) <= 1e-6);
      CHECK(rel_close(sw.p, f.shapiro_p, 1e-4));
    }
  }

  TEST_CASE("frozen scipy fixtures: distribution functions") {
    for (const auto& f : oracles::ppf_fixtures()) {
      CHECK(std::abs(normal_quantile(f.p) - f.z) <= 1e-9);
      CHECK(std::abs(normal_cdf(f.z) - f.p) <= 1e-9 * std::max(1.0, f.p) + 1e-15);
    }
    for (const auto& f : oracles::t_p_fixtures()) {
      CHECK(rel_close(student_t_two_sided_p(f.t, f.df), f.p, 1e-9));
    }
    CHECK(std::abs(student_t_quantile(0.975, 143) - oracles::kT975Df143) <= 1e-9);
    CHECK(regularized_incomplete_beta(2, 3, 0) == 0.0);
    CHECK(regularized_incomplete_beta(2, 3, 1) == 1.0);
    CHECK(regularized_incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
  }

  TEST_CASE("Shapiro-Wilk on a normal quantile sample") {
    std::vector<double> q;
    for (int i = 1; i <= 100; ++i) q.push_back(normal_quantile((i - 0.375) / 100.25));
    auto sw = shapiro_wilk(q);
    CHECK(sw.w > 0.99);
    CHECK(std::abs(sw.w - oracles::kQuant100W) <= 1e-6);
    CHECK(std::abs(sw.p - oracles::kQuant100P) <= 1e-6);
    CHECK(shapiro_wilk(oracles::stats_fixtures()[4].values).p < 0.05);
  }

  TEST_CASE("p formatting") {
    CHECK(format_p(0.0004) == "<0.001");
    CHECK(format_p(1e-20) == "<0.001");
    CHECK(format_p(0.001) == "0.001");
    CHECK(format_p(0.0742) == "0.074");
  }

  TEST_CASE("invariance: constant shift and column swap") {
    std::mt19937 rng(21);
    std::normal_distribution<double> nd(0.5, 0.2);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<ScoredSample> a, b, a_shift, b_shift;
      for (int i = 0; i < 30; ++i) {
        // dyadic values keep the shift exact in floating point
        const double x = std::round(nd(rng) * 1024) / 1024;
        const double y = std::round(nd(rng) * 1024) / 1024;
        a.push_back(scored("f" + std::to_string(i), 0, true, true, {{"m", x}}));
        b.push_back(scored("f" + std::to_string(i), 0, true, true, {{"m", y}}));
        a_shift.push_back(scored("f" + std::to_string(i), 0, true, true, {{"m", x + 8}}));
        b_shift.push_back(scored("f" + std::to_string(i), 0, true, true, {{"m", y + 8}}));
      }
      auto r = compare_metric(align_pairs(a, b), "m");
      auto s = compare_metric(align_pairs(a_shift, b_shift), "m");
      auto w = compare_metric(align_pairs(b, a), "m");
      CHECK(s.t_stat == r.t_stat);
      CHECK(s.cohens_d == r.cohens_d);
      CHECK(s.p_value == r.p_value);
      CHECK(w.t_stat == -r.t_stat);
      CHECK(w.cohens_d == -r.cohens_d);
      CHECK(w.p_value == r.p_value);
      CHECK(w.band == r.band);
      CHECK(r.ci_low <= r.mean_diff);
      CHECK(r.mean_diff <= r.ci_high);
      CHECK(r.ci_high - r.ci_low == doctest::Approx(2 * 1.96 * r.sd_diff / std::sqrt(30.0)));
    }
  }

  TEST_CASE("CI halves shrink as 1/sqrt(n) on replicated data") {
    const std::vector<double> base{0.1, 0.4, -0.2, 0.3, 0.25};
    std::vector<double> rep;
    for (int k = 0; k < 4; ++k) rep.insert(rep.end(), base.begin(), base.end());
    auto c1 = confidence_interval(base);
    auto c4 = confidence_interval(rep);
    const double sd_ratio = sample_sd(rep) / sample_sd(base);
    CHECK((c1.high - c1.low) / (c4.high - c4.low) == doctest::Approx(2.0 / sd_ratio).epsilon(1e-12));
  }

  TEST_CASE("table 5 overall row is internally consistent") {
    // mean diff 19.07 with CI half-width 2.99 at n = 144 implies sd_diff ~= 18.31
    const double sd = 2.99 * std::sqrt(144.0) / 1.96;
    const auto diffs = with_moments(144, 19.07, sd);
    auto ci = confidence_interval(diffs);
    CHECK(std::abs(ci.low - 16.08) <= 0.01);
    CHECK(std::abs(ci.high - 22.06) <= 0.01);
    CHECK(std::abs(cohens_d(diffs) - 1.04) <= 0.005);
    CHECK(effect_band(cohens_d(diffs)) == EffectBand::Large);
    CHECK(format_p(paired_ttest(diffs).p) == "<0.001");
  }

  TEST_CASE("align_pairs") {
    std::vector<ScoredSample> a, b;
    for (int f = 0; f < 53; ++f) {
      for (int s = 0; s < 3; ++s) {
        a.push_back(scored("film" + std::to_string(f), s, true, true));
        b.push_back(scored("film" + std::to_string(f), s, (f + s) % 4 != 0, true));
      }
    }
    auto pairs = align_pairs(a, b);
    CHECK(pairs.size() <= std::min(a.size(), b.size()));
    for (const auto& p : pairs) {
      CHECK(p.a->film_id == p.b->film_id);
      CHECK(p.a->sample_idx == p.b->sample_idx);
      CHECK(p.b->valid);
    }
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      CHECK(std::make_pair(pairs[i - 1].a->film_id, pairs[i - 1].a->sample_idx) <
            std::make_pair(pairs[i].a->film_id, pairs[i].a->sample_idx));
    }
    CHECK(align_pairs(a, b).size() == pairs.size());

    // order of input does not matter
    auto a_rev = a;
    std::reverse(a_rev.begin(), a_rev.end());
    CHECK(align_pairs(a_rev, b).size() == pairs.size());

    std::vector<ScoredSample> c{scored("x", 0, true, true)};
    CHECK(align_pairs(a, c).empty());
    CHECK(align_pairs(a, a).size() == a.size());

    // unjudged or invalid samples drop out
    std::vector<ScoredSample> unjudged{scored("film0", 0, true, false)};
    CHECK(align_pairs(a, unjudged).empty());

    auto dup = a;
    dup.push_back(a.front());
    CHECK_THROWS_AS(align_pairs(dup, b), InputError);
  }

  TEST_CASE("compare_metric") {
    std::vector<ScoredSample> a, b;
    for (int i = 0; i < 12; ++i) {
      a.push_back(scored("f" + std::to_string(i), 0, true, true, {{"x", 50.0 + (i % 5)}}));
      b.push_back(scored("f" + std::to_string(i), 0, true, true, {{"x", 40.0 + (i % 3)}}));
    }
    auto r = compare_metric(align_pairs(a, b), "x");
    CHECK(r.metric_name == "x");
    CHECK(r.n_pairs == 12);
    CHECK(r.mean_diff == doctest::Approx(r.mean_a - r.mean_b));
    CHECK(r.shapiro_w.has_value());
    CHECK(r.band == effect_band(r.cohens_d));
    CHECK(r.ci_t_high - r.ci_t_low > r.ci_high - r.ci_low);

    nlohmann::json j = r;
    CHECK(j.at("band") == to_string(r.band));
    auto back = j.get<PairedTestResult>();
    CHECK(back.t_stat == r.t_stat);
    CHECK(back.band == r.band);

    std::vector<ScoredSample> one_a{a[0]}, one_b{b[0]};
    CHECK_THROWS_AS(compare_metric(align_pairs(one_a, one_b), "x"), StatsError);
  }
}
