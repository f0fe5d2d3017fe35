#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scriptbench/backend.hpp"
#include "scriptbench/corpus.hpp"
#include "scriptbench/genclient.hpp"
#include "scriptbench/metrics.hpp"

namespace scriptbench::pipeline {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitDependency = 3,
  kExitTransport = 4,
  kExitData = 5,
};

/// Maps an exception from any stage onto the CLI exit codes.
int exit_code_for(const std::exception& e);

/// Parsed run configuration. Relative paths resolve against `base_dir`
/// (the directory holding the config file).
struct RunConfig {
  nlohmann::json raw;  // exactly what was loaded; snapshotted in the manifest
  fs::path base_dir;

  std::string model_a;
  std::string model_b;
  std::string judge;
  nlohmann::json backends = nlohmann::json::object();

  genclient::GenerationConfig generation;
  metrics::CompositeWeights weights;
  metrics::TokenizerMode tokenizer_mode = metrics::TokenizerMode::CjkWords;
  std::string dictionary_path;  // empty: bundled dictionary

  std::string blacklist_path;       // empty: built-in list
  std::string judge_template_path;  // empty: built-in template
  std::size_t judge_budget_chars = 12000;
  int judge_max_reasks = 2;
  double judge_temperature = 0.0;

  corpus::CleanOptions clean;
  std::size_t min_chars = 1000;
  double split_ratio = 0.5;

  static RunConfig from_json(const nlohmann::json& j, const fs::path& base_dir);
  static RunConfig load(const fs::path& path);

  std::vector<std::string> models() const { return {model_a, model_b}; }
  fs::path resolve(const std::string& p) const;
};

struct RunManifest {
  std::string run_id;
  nlohmann::json config;
  std::string config_hash;
  std::vector<std::string> models;
  std::string judge;
  std::string input_dir;
  std::string corpus_index_hash;
  std::string created_at;
  std::map<std::string, std::string> stages;  // stage name -> completion time

  bool complete(const std::string& stage) const { return stages.count(stage) > 0; }
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

/// UTC timestamp; honours SOURCE_DATE_EPOCH for reproducible runs.
std::string timestamp_now();

using BackendFactory =
    std::function<std::shared_ptr<backend::ChatBackend>(const std::string&, const nlohmann::json&)>;

struct RunOptions {
  fs::path out_dir = "runs";
  std::string run_id = "default";
  bool force = false;
  int workers = 1;
  double rate_limit = 0.0;  // calls per second per backend, 0 = unlimited
  std::ostream* log = nullptr;
  BackendFactory backend_factory;  // defaults to backend::make_backend
};

/// One run directory (<out_dir>/<run_id>) and its stages:
/// ingest -> profile -> generate(A, B) -> judge(A, B) -> score(A, B) -> stats -> report.
class Run {
 public:
  Run(RunConfig config, RunOptions options);

  const fs::path& dir() const { return dir_; }
  const RunManifest& manifest() const { return manifest_; }
  const RunConfig& config() const { return config_; }

  fs::path corpus_dir() const { return dir_ / "corpus"; }
  fs::path index_path() const { return corpus_dir() / "index.jsonl"; }
  fs::path samples_path(const std::string& model) const;
  fs::path verdicts_path(const std::string& model) const;
  fs::path scores_path(const std::string& model) const;
  fs::path stats_dir() const { return dir_ / "stats"; }
  fs::path report_dir() const { return dir_ / "report"; }

  /// Each returns false when the stage was already complete and skipped.
  bool ingest(const fs::path& input_dir);
  bool profile();
  bool generate(const std::string& model);
  bool judge(const std::string& model);
  bool score(const std::string& model);
  bool stats();
  bool report();

  void run_all(const fs::path& input_dir);

 private:
  void require(const std::string& stage) const;
  void mark_complete(const std::string& stage);
  void save_manifest() const;
  std::ostream& log() const;
  std::shared_ptr<backend::ChatBackend> make_backend(const std::string& name) const;
  std::vector<corpus::FilmRecord> films() const;
  std::vector<std::string> blacklist() const;

  RunConfig config_;
  RunOptions options_;
  fs::path dir_;
  RunManifest manifest_;
};

}  // namespace scriptbench::pipeline
