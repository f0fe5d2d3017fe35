#include "scriptbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "scriptbench/genclient.hpp"
#include "scriptbench/judge.hpp"
#include "scriptbench/stats.hpp"

namespace scriptbench::report {

using nlohmann::json;

const char* const kEmptyCell = "—";

std::string fmt_fixed(std::optional<double> v, int decimals) {
  if (!v || !std::isfinite(*v)) return kEmptyCell;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  std::string s = buf;
  // Avoid "-0.00".
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string fmt_signed(std::optional<double> v, int decimals) {
  std::string s = fmt_fixed(v, decimals);
  if (s == kEmptyCell || s.front() == '-') return s;
  return "+" + s;
}

std::string fmt_mean_sd(std::optional<double> mean, std::optional<double> sd, int decimals) {
  if (!mean) return kEmptyCell;
  return fmt_fixed(mean, decimals) + " ± " + fmt_fixed(sd, decimals);
}

std::string fmt_percent(std::optional<double> fraction) {
  if (!fraction) return kEmptyCell;
  return genclient::format_rate(*fraction);
}

std::string fmt_thousands(double v) {
  const long long n = std::llround(v);
  std::string digits = std::to_string(n < 0 ? -n : n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return n < 0 ? "-" + out : out;
}

// ---------------------------------------------------------------------------

std::string Table::to_markdown() const {
  std::ostringstream out;
  out << "### " << title << "\n\n|";
  for (const auto& h : header) out << ' ' << h << " |";
  out << "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
  out << '\n';
  for (const auto& row : rows) {
    out << '|';
    for (const auto& cell : row) out << ' ' << cell << " |";
    out << '\n';
  }
  for (const auto& n : notes) out << "\n" << n << "\n";
  return out.str();
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += csv_cell(cells[i]);
  }
  return line + "\n";
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string Table::to_csv(const std::string& run_id) const {
  std::vector<std::string> h{"run_id"};
  h.insert(h.end(), header.begin(), header.end());
  std::string out = csv_line(h);
  for (const auto& row : rows) {
    std::vector<std::string> cells{run_id};
    cells.insert(cells.end(), row.begin(), row.end());
    out += csv_line(cells);
  }
  return out;
}

// ---------------------------------------------------------------------------

int decimals_for(const std::string& metric) {
  for (const char* key : judge::kScoreKeys) {
    if (metric == key) return 2;
  }
  return metric == "overall" ? 2 : 4;
}

std::string metric_label(const std::string& metric) {
  static const std::map<std::string, std::string> labels{
      {"rouge_l", "ROUGE-L"},
      {"struct_sim", "Structural Similarity"},
      {"overall", "Overall Score"},
      {"composite", "Composite Score"},
      {"overall_similarity_0_100", "Overall Score"},
      {"plot_event_alignment", "Plot Alignment"},
      {"character_consistency", "Character Consistency"},
      {"tone_style_match", "Tone-Style Match"},
      {"format_match", "Format Match"},
      {"ending_closure", "Ending Closure"}};
  auto it = labels.find(metric);
  return it == labels.end() ? metric : it->second;
}

namespace {

std::optional<double> metric_of(const json& score, const std::string& metric) {
  auto get = [&](const json& v) -> std::optional<double> {
    if (v.is_number()) return v.get<double>();
    return std::nullopt;
  };
  if (metric == "rouge_l") return get(score.at("rouge").at("f1"));
  if (metric == "struct_sim") return get(score.at("struct_sim"));
  if (metric == "overall") return score.contains("overall") ? get(score["overall"]) : std::nullopt;
  if (metric == "composite") {
    return score.contains("composite") ? get(score["composite"]) : std::nullopt;
  }
  if (score.contains("judge_scores") && score["judge_scores"].is_object() &&
      score["judge_scores"].contains(metric)) {
    return get(score["judge_scores"][metric]);
  }
  return std::nullopt;
}

bool is_judged(const json& score) { return score.value("judged", false); }

std::vector<double> collect(const std::vector<json>& scores, const std::string& metric,
                            bool judged_only) {
  std::vector<double> out;
  for (const auto& s : scores) {
    if (judged_only && !is_judged(s)) continue;
    if (auto v = metric_of(s, metric)) out.push_back(*v);
  }
  return out;
}

struct MeanSd {
  std::optional<double> mean, sd;
};

MeanSd mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {};
  return {stats::mean(v), stats::sample_sd(v)};
}

std::optional<double> diff(const MeanSd& a, const MeanSd& b) {
  if (!a.mean || !b.mean) return std::nullopt;
  return *a.mean - *b.mean;
}

std::size_t count_valid(const std::vector<json>& samples) {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const json& s) {
    return s.value("validity", "") == "VALID";
  }));
}

std::size_t count_validity(const std::vector<json>& samples, const std::string& v) {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [&](const json& s) { return s.value("validity", "") == v; }));
}

Table table1(const json& summary) {
  Table t;
  t.name = "table1_dataset";
  t.title = "Table 1. Dataset statistics";
  t.header = {"Statistic", "Value"};
  const auto films = summary.value("films", 0);
  t.rows.push_back({"Total Films", std::to_string(films)});
  auto chars = [&](const char* key) {
    return summary.contains(key) && summary[key].is_number() ? fmt_thousands(summary[key].get<double>())
                                                             : std::string(kEmptyCell);
  };
  t.rows.push_back({"Mean First-Half Characters", chars("mean_upper_chars")});
  t.rows.push_back({"Mean Second-Half Characters", chars("mean_lower_chars")});
  auto extreme = [&](const char* key) -> std::string {
    if (!summary.contains(key) || !summary[key].is_object()) return kEmptyCell;
    const auto& e = summary[key];
    return fmt_thousands(e.at("chars").get<double>()) + " (" + e.at("title").get<std::string>() + ")";
  };
  t.rows.push_back({"Longest Script (characters)", extreme("longest")});
  t.rows.push_back({"Shortest Script (characters)", extreme("shortest")});
  std::string years = kEmptyCell;
  if (summary.contains("year_min") && summary["year_min"].is_number()) {
    years = std::to_string(summary["year_min"].get<int>()) + "-" +
            std::to_string(summary["year_max"].get<int>());
  }
  t.rows.push_back({"Year Range", years});
  return t;
}

Table table2(const ReportInputs& in, std::size_t n_pairs) {
  Table t;
  t.name = "table2_samples";
  t.title = "Table 2. Sample collection statistics";
  t.header = {"Metric", in.model_a, in.model_b, "Total"};
  const std::size_t th = in.theoretical_per_model;
  const std::size_t va = count_valid(in.samples_a);
  const std::size_t vb = count_valid(in.samples_b);
  auto rate = [](std::size_t valid, std::size_t theoretical) -> std::optional<double> {
    if (theoretical == 0) return std::nullopt;
    return static_cast<double>(valid) / static_cast<double>(theoretical);
  };
  t.rows.push_back({"Theoretical Samples", std::to_string(th), std::to_string(th),
                    std::to_string(2 * th)});
  t.rows.push_back(
      {"Valid Samples", std::to_string(va), std::to_string(vb), std::to_string(va + vb)});
  t.rows.push_back({"Validity Rate", fmt_percent(rate(va, th)), fmt_percent(rate(vb, th)),
                    fmt_percent(rate(va + vb, 2 * th))});
  t.rows.push_back({"Paired Samples", std::to_string(n_pairs), std::to_string(n_pairs),
                    std::to_string(n_pairs) + " pairs"});
  for (const char* v : {"TOO_SHORT", "TOO_LONG", "META_DISCOURSE", "PARSE_FAILURE", "API_TIMEOUT",
                        "API_MODERATION", "API_OTHER"}) {
    const std::size_t a = count_validity(in.samples_a, v);
    const std::size_t b = count_validity(in.samples_b, v);
    t.rows.push_back({std::string("Invalid: ") + v, std::to_string(a), std::to_string(b),
                      std::to_string(a + b)});
  }
  const std::size_t ma = in.samples_a.size() < th ? th - in.samples_a.size() : 0;
  const std::size_t mb = in.samples_b.size() < th ? th - in.samples_b.size() : 0;
  t.rows.push_back({"Not Generated", std::to_string(ma), std::to_string(mb), std::to_string(ma + mb)});
  return t;
}

Table metric_table(const ReportInputs& in, const std::string& name, const std::string& title,
                   const std::string& first_col, const std::vector<std::string>& metrics,
                   bool judged_only) {
  Table t;
  t.name = name;
  t.title = title;
  auto n_of = [&](const std::vector<json>& scores) {
    return judged_only ? static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), is_judged))
                       : scores.size();
  };
  t.header = {first_col, in.model_a + " (n=" + std::to_string(n_of(in.scores_a)) + ")",
              in.model_b + " (n=" + std::to_string(n_of(in.scores_b)) + ")", "Difference"};
  for (const auto& m : metrics) {
    const int dec = decimals_for(m);
    const MeanSd a = mean_sd(collect(in.scores_a, m, judged_only));
    const MeanSd b = mean_sd(collect(in.scores_b, m, judged_only));
    t.rows.push_back({metric_label(m), fmt_mean_sd(a.mean, a.sd, dec), fmt_mean_sd(b.mean, b.sd, dec),
                      fmt_signed(diff(a, b), dec)});
  }
  return t;
}

Table table5(const ReportInputs& in) {
  Table t;
  t.name = "table5_paired_tests";
  const auto n_pairs = in.stats_report.value("n_pairs", 0);
  t.title = "Table 5. Paired t-test results (n=" + std::to_string(n_pairs) + " pairs)";
  t.header = {"Metric",   in.model_a, in.model_b, "Difference [95% CI]", "t-value",
              "p-value",  "Cohen's d", "95% CI (t)", "Shapiro-Wilk W (p)"};
  const json tests = in.stats_report.value("tests", json::array());
  for (const auto& j : tests) {
    const auto r = j.get<stats::PairedTestResult>();
    const int dec = decimals_for(r.metric_name);
    std::string sw = kEmptyCell;
    if (r.shapiro_w && r.shapiro_p) sw = fmt_fixed(r.shapiro_w, 4) + " (" + stats::format_p(*r.shapiro_p) + ")";
    t.rows.push_back(
        {metric_label(r.metric_name), fmt_mean_sd(r.mean_a, r.sd_a, dec),
         fmt_mean_sd(r.mean_b, r.sd_b, dec),
         fmt_signed(r.mean_diff, dec) + " [" + fmt_signed(r.ci_low, dec) + ", " +
             fmt_signed(r.ci_high, dec) + "]",
         fmt_signed(r.t_stat, 2), stats::format_p(r.p_value),
         fmt_signed(r.cohens_d, 2) + " (" + stats::to_string(r.band) + ")",
         "[" + fmt_signed(r.ci_t_low, dec) + ", " + fmt_signed(r.ci_t_high, dec) + "]", sw});
  }
  t.notes.push_back(
      "Effect size bands: |d| < 0.2 negligible, 0.2 <= |d| < 0.5 small, 0.5 <= |d| < 0.8 medium, "
      "|d| >= 0.8 large. The bracketed CI uses 1.96; the t-based CI is shown separately.");
  for (const auto& w : in.stats_report.value("warnings", std::vector<std::string>{})) {
    t.notes.push_back("Warning: " + w);
  }
  return t;
}

Table table6(const ReportInputs& in) {
  Table t;
  t.name = "table6_composite";
  t.title = "Table 6. Composite score descriptive statistics";
  t.header = {"Statistic", in.model_a, in.model_b};
  auto desc = [&](const std::vector<json>& scores) -> std::optional<stats::Descriptives> {
    const auto v = collect(scores, "composite", true);
    if (v.empty()) return std::nullopt;
    return stats::descriptives(v);
  };
  const auto a = desc(in.scores_a);
  const auto b = desc(in.scores_b);
  auto row = [&](const char* label, auto field) {
    t.rows.push_back({label, a ? fmt_fixed(field(*a), 4) : kEmptyCell,
                      b ? fmt_fixed(field(*b), 4) : kEmptyCell});
  };
  row("Mean", [](const stats::Descriptives& d) { return d.mean; });
  row("Std Dev", [](const stats::Descriptives& d) { return d.sd; });
  row("Minimum", [](const stats::Descriptives& d) { return d.min; });
  row("Maximum", [](const stats::Descriptives& d) { return d.max; });
  row("IQR", [](const stats::Descriptives& d) { return d.iqr; });
  auto cv = [](const std::optional<stats::Descriptives>& d) -> std::string {
    if (!d || !d->cv_percent) return kEmptyCell;
    return fmt_fixed(d->cv_percent, 1) + "%";
  };
  t.rows.push_back({"CV", cv(a), cv(b)});
  return t;
}

}  // namespace

std::vector<stats::ScoredSample> scored_samples(const std::vector<json>& scores) {
  std::vector<stats::ScoredSample> out;
  for (const auto& s : scores) {
    stats::ScoredSample x;
    x.film_id = s.at("film_id").get<std::string>();
    x.sample_idx = s.at("sample_idx").get<int>();
    x.valid = s.value("validity", "VALID") == "VALID";
    x.judged = is_judged(s);
    for (const char* m : {"rouge_l", "struct_sim", "overall", "composite"}) {
      if (auto v = metric_of(s, m)) x.metrics[m] = *v;
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Table> emit_tables(const ReportInputs& inputs) {
  ReportInputs in = inputs;
  if (!in.stats_report.is_object()) in.stats_report = json::object();
  std::vector<Table> tables;
  if (in.corpus_summary.is_object() && !in.corpus_summary.empty()) {
    tables.push_back(table1(in.corpus_summary));
  }
  tables.push_back(table2(in, in.stats_report.value("n_pairs", std::size_t{0})));
  tables.push_back(metric_table(in, "table3_automated", "Table 3. Automated metrics (all valid samples)",
                                "Metric", {"rouge_l", "struct_sim"}, false));
  tables.push_back(metric_table(in, "table3b_automated_judged",
                                "Table 3b. Automated metrics (judged samples)", "Metric",
                                {"rouge_l", "struct_sim"}, true));
  std::vector<std::string> dims(judge::kScoreKeys.begin(), judge::kScoreKeys.end());
  tables.push_back(metric_table(in, "table4_judge", "Table 4. Judge scores (judged samples)",
                                "Dimension", dims, true));
  tables.push_back(table5(in));
  tables.push_back(table6(in));
  return tables;
}

std::optional<double> pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double mx = stats::mean(x);
  const double my = stats::mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<std::string, std::string> emit_plot_data(const ReportInputs& inputs) {
  ReportInputs in = inputs;
  if (!in.stats_report.is_object()) in.stats_report = json::object();
  std::map<std::string, std::string> files;
  const std::string& run = in.run_id;

  // Effect sizes with a CI on the d scale (mean-difference CI divided by SD_diff).
  {
    std::string csv = csv_line({"run_id", "metric", "d", "ci_low", "ci_high", "band"});
    for (const auto& j : in.stats_report.value("tests", json::array())) {
      const auto r = j.get<stats::PairedTestResult>();
      const double lo = r.sd_diff > 0 ? r.ci_low / r.sd_diff : r.cohens_d;
      const double hi = r.sd_diff > 0 ? r.ci_high / r.sd_diff : r.cohens_d;
      csv += csv_line({run, r.metric_name, num(r.cohens_d), num(lo), num(hi), stats::to_string(r.band)});
    }
    files["forest.csv"] = csv;
  }

  // ROUGE-L vs overall score per judged sample, with the per-model correlation.
  {
    std::string csv = csv_line(
        {"run_id", "model_id", "film_id", "sample_idx", "rouge_f1", "overall", "model_r"});
    for (const auto* side : {&in.scores_a, &in.scores_b}) {
      std::vector<double> xs, ys;
      std::vector<const json*> rows;
      for (const auto& s : *side) {
        auto x = metric_of(s, "rouge_l");
        auto y = metric_of(s, "overall");
        if (!x || !y) continue;
        xs.push_back(*x);
        ys.push_back(*y);
        rows.push_back(&s);
      }
      const auto r = pearson_r(xs, ys);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const json& s = *rows[i];
        csv += csv_line({run, s.at("model_id").get<std::string>(), s.at("film_id").get<std::string>(),
                         std::to_string(s.at("sample_idx").get<int>()), num(xs[i]), num(ys[i]),
                         num(r)});
      }
    }
    files["scatter.csv"] = csv;
  }

  const auto sa = scored_samples(in.scores_a);
  const auto sb = scored_samples(in.scores_b);
  const auto pairs = stats::align_pairs(sa, sb);

  // Paired differences in ROUGE-L and overall score; zero counts as positive.
  {
    std::size_t counts[4] = {0, 0, 0, 0};
    std::string points = csv_line({"run_id", "film_id", "sample_idx", "delta_rouge", "delta_overall",
                                   "quadrant"});
    static const char* names[4] = {"I", "II", "III", "IV"};
    for (const auto& p : pairs) {
      const double dr = p.a->metrics.at("rouge_l") - p.b->metrics.at("rouge_l");
      auto oa = p.a->metrics.find("overall");
      auto ob = p.b->metrics.find("overall");
      if (oa == p.a->metrics.end() || ob == p.b->metrics.end()) continue;
      const double dov = oa->second - ob->second;
      int q;
      if (dr >= 0 && dov >= 0) q = 0;
      else if (dr < 0 && dov >= 0) q = 1;
      else if (dr < 0) q = 2;
      else q = 3;
      ++counts[q];
      points += csv_line({run, p.a->film_id, std::to_string(p.a->sample_idx), num(dr), num(dov), names[q]});
    }
    std::string csv = csv_line({"run_id", "quadrant", "delta_rouge", "delta_overall", "count"});
    static const char* signs[4][2] = {{">=0", ">=0"}, {"<0", ">=0"}, {"<0", "<0"}, {">=0", "<0"}};
    for (int q = 0; q < 4; ++q) {
      csv += csv_line({run, names[q], signs[q][0], signs[q][1], std::to_string(counts[q])});
    }
    files["quadrants.csv"] = csv;
    files["quadrant_points.csv"] = points;
  }

  // Per-film structural similarity differences, largest |delta| first.
  {
    struct Film {
      std::vector<double> a, b;
    };
    std::map<std::string, Film> films;
    for (const auto& p : pairs) {
      films[p.a->film_id].a.push_back(p.a->metrics.at("struct_sim"));
      films[p.a->film_id].b.push_back(p.b->metrics.at("struct_sim"));
    }
    struct Row {
      std::string film_id;
      std::size_t n;
      double mean_a, mean_b, delta;
    };
    std::vector<Row> rows;
    for (const auto& [id, f] : films) {
      const double ma = stats::mean(f.a);
      const double mb = stats::mean(f.b);
      rows.push_back({id, f.a.size(), ma, mb, ma - mb});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
      return std::abs(x.delta) > std::abs(y.delta);
    });
    std::string csv = csv_line({"run_id", "film_id", "n_pairs", "struct_sim_a", "struct_sim_b", "delta"});
    for (const auto& r : rows) {
      csv += csv_line({run, r.film_id, std::to_string(r.n), num(r.mean_a), num(r.mean_b), num(r.delta)});
    }
    files["perfilm.csv"] = csv;
  }
  return files;
}

}  // namespace scriptbench::report
