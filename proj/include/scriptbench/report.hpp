#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scriptbench/stats.hpp"

namespace scriptbench::report {

// Cell formatting. Missing values render as "—".
extern const char* const kEmptyCell;
std::string fmt_fixed(std::optional<double> v, int decimals);
std::string fmt_signed(std::optional<double> v, int decimals);  // "+19.07", "-0.0106"
std::string fmt_mean_sd(std::optional<double> mean, std::optional<double> sd, int decimals);
std::string fmt_percent(std::optional<double> fraction);  // "98.7%"
std::string fmt_thousands(double v);                      // "19,835"

struct Table {
  std::string name;   // file stem, e.g. "table5_paired_tests"
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;

  std::string to_markdown() const;
  /// RFC 4180 quoting; first column is the run id.
  std::string to_csv(const std::string& run_id) const;
};

/// Everything the report reads, as loaded from the stage files.
struct ReportInputs {
  std::string run_id;
  std::string model_a;
  std::string model_b;
  std::size_t theoretical_per_model = 0;  // films x samples per film
  std::vector<nlohmann::json> samples_a, samples_b;  // samples JSONL records
  std::vector<nlohmann::json> scores_a, scores_b;    // scores JSONL records
  nlohmann::json stats_report;                       // stats stage output
  nlohmann::json corpus_summary;                     // ingest summary (optional)
};

/// Score records as stats inputs: valid when validity is VALID, judged per
/// the record, metrics rouge_l / struct_sim / overall / composite when present.
std::vector<stats::ScoredSample> scored_samples(const std::vector<nlohmann::json>& scores);

/// Decimals used for a metric: 2 for 0-100 judge scores, 4 otherwise.
int decimals_for(const std::string& metric);
std::string metric_label(const std::string& metric);

/// Tables 1-6 analogs in order. Table 1 is omitted without a corpus summary.
std::vector<Table> emit_tables(const ReportInputs& in);

/// Pearson correlation; empty when either side has zero variance or n < 2.
std::optional<double> pearson_r(const std::vector<double>& x, const std::vector<double>& y);

/// Plot-ready CSVs keyed by file name: forest.csv, scatter.csv,
/// quadrants.csv, quadrant_points.csv, perfilm.csv.
std::map<std::string, std::string> emit_plot_data(const ReportInputs& in);

}  // namespace scriptbench::report
