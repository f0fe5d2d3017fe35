#include "scriptbench/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iostream>
#include <mutex>
#include <set>

#include "scriptbench/error.hpp"
#include "scriptbench/format.hpp"
#include "scriptbench/jsonutil.hpp"
#include "scriptbench/judge.hpp"
#include "scriptbench/report.hpp"
#include "scriptbench/stats.hpp"
#include "scriptbench/text.hpp"

namespace scriptbench::pipeline {

using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DependencyError*>(&e)) return kExitDependency;
  if (dynamic_cast<const TransportError*>(&e)) return kExitTransport;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const EncodingError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const VerdictError*>(&e) ||
      dynamic_cast<const StatsError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    return kExitData;
  }
  return kExitOther;
}

// ---------------------------------------------------------------------------
// Config

fs::path RunConfig::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  try {
    c.model_a = j.value("model_a", "");
    c.model_b = j.value("model_b", "");
    c.backends = j.value("backends", json::object());
    if (c.model_a.empty() || c.model_b.empty()) {
      throw ConfigError("config needs model_a and model_b");
    }
    if (c.model_a == c.model_b) throw ConfigError("model_a and model_b must differ");

    const json judge = j.value("judge", json::object());
    c.judge = judge.value("backend", "");
    if (c.judge.empty()) throw ConfigError("config needs judge.backend");
    c.judge_template_path = judge.value("template_path", "");
    c.judge_budget_chars = judge.value("budget_chars", c.judge_budget_chars);
    c.judge_max_reasks = judge.value("max_reasks", c.judge_max_reasks);
    c.judge_temperature = judge.value("temperature", c.judge_temperature);
    if (c.judge_max_reasks < 0) throw ConfigError("judge.max_reasks must be >= 0");

    for (const auto& name : {c.model_a, c.model_b, c.judge}) {
      if (!c.backends.contains(name)) throw ConfigError("no backend entry for '" + name + "'");
    }

    c.generation = j.value("generation", json::object()).get<genclient::GenerationConfig>();
    c.generation.validate();

    const json w = j.value("composite_weights", json::object());
    c.weights.rouge = w.value("rouge", c.weights.rouge);
    c.weights.structure = w.value("structure", c.weights.structure);
    c.weights.overall = w.value("overall", c.weights.overall);
    c.weights.validate();

    c.tokenizer_mode = metrics::tokenizer_mode_from_string(j.value("tokenizer_mode", "cjk_words"));
    c.dictionary_path = j.value("dictionary_path", "");
    c.blacklist_path = j.value("blacklist_path", "");

    const json corpus = j.value("corpus", json::object());
    c.clean.encoding = corpus.value("encoding", c.clean.encoding);
    if (corpus.contains("noise_patterns")) {
      c.clean.noise_patterns = corpus["noise_patterns"].get<std::vector<std::string>>();
    }
    c.min_chars = corpus.value("min_chars", c.min_chars);
    c.split_ratio = corpus.value("split_ratio", c.split_ratio);
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) {
      throw ConfigError("corpus.split_ratio must be in (0, 1)");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::string body;
  try {
    body = corpus::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Manifest

void to_json(json& j, const RunManifest& m) {
  j = json{{"run_id", m.run_id},
           {"config", m.config},
           {"config_hash", m.config_hash},
           {"models", m.models},
           {"judge", m.judge},
           {"input_dir", m.input_dir},
           {"corpus_index_hash", m.corpus_index_hash},
           {"created_at", m.created_at},
           {"stages", m.stages}};
}

void from_json(const json& j, RunManifest& m) {
  m.run_id = j.at("run_id").get<std::string>();
  m.config = j.at("config");
  m.config_hash = j.value("config_hash", "");
  m.models = j.value("models", std::vector<std::string>{});
  m.judge = j.value("judge", "");
  m.input_dir = j.value("input_dir", "");
  m.corpus_index_hash = j.value("corpus_index_hash", "");
  m.created_at = j.value("created_at", "");
  m.stages = j.value("stages", std::map<std::string, std::string>{});
}

std::string timestamp_now() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::stoll(epoch));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------

namespace {

std::string file_stem_for(const std::string& model) {
  std::string out;
  for (char c : model) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

// Stage order; forcing a stage invalidates everything after it.
std::vector<std::string> stage_order(const std::vector<std::string>& models) {
  std::vector<std::string> out{"ingest", "profile"};
  for (const char* s : {"generate", "judge", "score"}) {
    for (const auto& m : models) out.push_back(std::string(s) + ":" + m);
  }
  out.push_back("stats");
  out.push_back("report");
  return out;
}

// Connection-level failures abort the stage instead of being recorded as
// invalid samples, so a resumed run retries them.
class TransportGuard : public backend::ChatBackend {
 public:
  explicit TransportGuard(std::shared_ptr<backend::ChatBackend> inner) : inner_(std::move(inner)) {}
  backend::ChatResponse complete(const backend::ChatRequest& request) override {
    auto r = inner_->complete(request);
    if (r.status == 0 && r.failure == backend::Failure::Other) {
      throw TransportError("backend '" + inner_->name() + "': " + r.error);
    }
    return r;
  }
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<backend::ChatBackend> inner_;
};

struct Job {
  const corpus::FilmRecord* film;
  int sample_idx;
};

std::pair<std::string, int> key_of(const json& rec) {
  return {rec.at("film_id").get<std::string>(), rec.at("sample_idx").get<int>()};
}

// Appends results to a JSONL file in job order regardless of completion order.
class OrderedWriter {
 public:
  OrderedWriter(fs::path path, std::size_t count) : path_(std::move(path)), slots_(count) {}
  void put(std::size_t i, json record) {
    std::lock_guard lock(mutex_);
    slots_[i] = std::move(record);
    while (next_ < slots_.size() && slots_[next_]) {
      jsonutil::append_jsonl(path_, *slots_[next_]);
      slots_[next_].reset();
      ++next_;
    }
  }

 private:
  fs::path path_;
  std::vector<std::optional<json>> slots_;
  std::size_t next_ = 0;
  std::mutex mutex_;
};

std::vector<json> read_records(const fs::path& path) {
  if (!fs::exists(path)) return {};
  return jsonutil::read_jsonl(path);
}

void write_json(const fs::path& path, const json& j) { corpus::write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const json j = json::parse(corpus::read_file(path), nullptr, false);
  if (j.is_discarded()) throw InputError(path.string() + " is not valid JSON");
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------

Run::Run(RunConfig config, RunOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  if (options_.run_id.empty()) throw ConfigError("run id must be non-empty");
  if (options_.run_id.find('/') != std::string::npos || options_.run_id == "." ||
      options_.run_id == "..") {
    throw ConfigError("run id must be a plain name");
  }
  if (!options_.backend_factory) options_.backend_factory = backend::make_backend;
  dir_ = options_.out_dir / options_.run_id;

  const std::string hash = jsonutil::sha256_hex(config_.raw.dump());
  const fs::path mpath = dir_ / "manifest.json";
  if (fs::exists(mpath)) {
    manifest_ = read_json(mpath).get<RunManifest>();
    if (manifest_.config_hash != hash) {
      throw ConfigError("run '" + options_.run_id +
                        "' was started with a different config; use a new --run-id");
    }
  } else {
    manifest_.run_id = options_.run_id;
    manifest_.config = config_.raw;
    manifest_.config_hash = hash;
    manifest_.models = config_.models();
    manifest_.judge = config_.judge;
    manifest_.created_at = timestamp_now();
  }
}

std::ostream& Run::log() const { return options_.log ? *options_.log : std::cerr; }

fs::path Run::samples_path(const std::string& model) const {
  return dir_ / "samples" / (file_stem_for(model) + ".jsonl");
}
fs::path Run::verdicts_path(const std::string& model) const {
  return dir_ / "verdicts" / (file_stem_for(model) + ".jsonl");
}
fs::path Run::scores_path(const std::string& model) const {
  return dir_ / "scores" / (file_stem_for(model) + ".jsonl");
}

void Run::save_manifest() const { write_json(dir_ / "manifest.json", json(manifest_)); }

void Run::require(const std::string& stage) const {
  if (!manifest_.complete(stage)) {
    throw DependencyError(stage, "run '" + manifest_.run_id + "' has not completed it yet");
  }
}

void Run::mark_complete(const std::string& stage) {
  manifest_.stages[stage] = timestamp_now();
  save_manifest();
}

std::shared_ptr<backend::ChatBackend> Run::make_backend(const std::string& name) const {
  const json& spec = config_.backends.at(name);
  const std::string type = spec.value("type", "");
  if (type == "http" || type == "openai") {
    const std::string env = spec.value("api_key_env", "");
    if (!env.empty()) {
      const char* key = std::getenv(env.c_str());
      if (!key || !*key) {
        throw ConfigError("backend '" + name + "' needs environment variable " + env);
      }
    }
  }
  std::shared_ptr<backend::ChatBackend> b = options_.backend_factory(name, spec);
  if (options_.rate_limit > 0.0) {
    b = std::make_shared<backend::RateLimitedBackend>(std::move(b), options_.rate_limit);
  }
  return std::make_shared<TransportGuard>(std::move(b));
}

std::vector<corpus::FilmRecord> Run::films() const { return corpus::read_index(index_path()); }

std::vector<std::string> Run::blacklist() const {
  if (config_.blacklist_path.empty()) return genclient::default_blacklist();
  return genclient::load_blacklist(config_.resolve(config_.blacklist_path).string());
}

namespace {

// Returns true when the stage should run; clears downstream flags on --force.
bool begin_stage(RunManifest& m, const std::string& stage, bool force, std::ostream& log) {
  if (m.complete(stage) && !force) {
    log << "[" << stage << "] already complete; skipping (use --force to redo)\n";
    return false;
  }
  if (force) {
    const auto order = stage_order(m.models);
    auto it = std::find(order.begin(), order.end(), stage);
    if (it != order.end()) {
      for (auto later = it; later != order.end(); ++later) {
        // Per-model stages only invalidate their own model downstream, plus stats/report.
        const auto colon = later->find(':');
        const auto own = stage.find(':');
        if (colon != std::string::npos && own != std::string::npos &&
            later->substr(colon) != stage.substr(own)) {
          continue;
        }
        m.stages.erase(*later);
      }
    }
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// ingest

bool Run::ingest(const fs::path& input_dir) {
  if (!begin_stage(manifest_, "ingest", options_.force, log())) return false;
  if (!fs::is_directory(input_dir)) {
    throw InputError("input directory " + input_dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .txt scripts in " + input_dir.string());

  json metadata = json::object();
  if (fs::exists(input_dir / "metadata.json")) metadata = read_json(input_dir / "metadata.json");

  fs::remove_all(corpus_dir());
  std::vector<corpus::FilmRecord> kept;
  json dropped = json::array();
  for (const auto& file : files) {
    const std::string id = file.stem().string();
    std::string cleaned;
    try {
      cleaned = corpus::clean_text(corpus::read_file(file), config_.clean);
    } catch (const EncodingError& e) {
      throw InputError(file.string() + ": " + e.what());
    }
    const auto halves = corpus::split_halves(cleaned, config_.split_ratio);
    corpus::FilmRecord rec;
    rec.film_id = id;
    rec.title = id;
    if (metadata.contains(id)) {
      const json& m = metadata[id];
      rec.title = m.value("title", id);
      if (m.contains("year") && m["year"].is_number_integer()) rec.year = m["year"].get<int>();
      if (m.contains("genre") && m["genre"].is_string()) rec.genre = m["genre"].get<std::string>();
    }
    rec.upper_path = "films/" + id + "/upper.txt";
    rec.lower_path = "films/" + id + "/lower.txt";
    corpus::write_file(corpus_dir() / rec.upper_path, halves.upper);
    corpus::write_file(corpus_dir() / rec.lower_path, halves.lower);
    const auto decision = corpus::quality_filter(rec, corpus_dir(), {config_.min_chars});
    if (!decision.keep) {
      log() << "[ingest] drop " << id << ": " << corpus::to_string(decision.reason) << "\n";
      dropped.push_back({{"film_id", id}, {"reason", corpus::to_string(decision.reason)}});
      fs::remove_all(corpus_dir() / "films" / id);
      continue;
    }
    kept.push_back(std::move(rec));
  }
  corpus::build_index(kept, index_path());

  json summary{{"run_id", manifest_.run_id}, {"films", kept.size()}, {"dropped", dropped}};
  if (!kept.empty()) {
    double up = 0, low = 0;
    const corpus::FilmRecord* longest = &kept.front();
    const corpus::FilmRecord* shortest = &kept.front();
    std::optional<int> ymin, ymax;
    for (const auto& r : kept) {
      up += static_cast<double>(r.upper_chars);
      low += static_cast<double>(r.lower_chars);
      const auto total = r.upper_chars + r.lower_chars;
      if (total > longest->upper_chars + longest->lower_chars) longest = &r;
      if (total < shortest->upper_chars + shortest->lower_chars) shortest = &r;
      if (r.year) {
        ymin = ymin ? std::min(*ymin, *r.year) : *r.year;
        ymax = ymax ? std::max(*ymax, *r.year) : *r.year;
      }
    }
    const auto n = static_cast<double>(kept.size());
    summary["mean_upper_chars"] = up / n;
    summary["mean_lower_chars"] = low / n;
    auto extreme = [](const corpus::FilmRecord* r) {
      return json{{"film_id", r->film_id}, {"title", r->title},
                  {"chars", r->upper_chars + r->lower_chars}};
    };
    summary["longest"] = extreme(longest);
    summary["shortest"] = extreme(shortest);
    summary["year_min"] = ymin ? json(*ymin) : json(nullptr);
    summary["year_max"] = ymax ? json(*ymax) : json(nullptr);
  }
  write_json(corpus_dir() / "summary.json", summary);

  report::ReportInputs in;
  in.corpus_summary = summary;
  log() << report::emit_tables(in).front().to_markdown();

  manifest_.input_dir = input_dir.string();
  manifest_.corpus_index_hash = jsonutil::sha256_hex(corpus::read_file(index_path()));
  mark_complete("ingest");
  return true;
}

// ---------------------------------------------------------------------------
// profile

bool Run::profile() {
  require("ingest");
  if (!begin_stage(manifest_, "profile", options_.force, log())) return false;
  auto records = films();
  for (auto& rec : records) {
    const std::string upper = corpus::read_file(corpus_dir() / rec.upper_path);
    const format::FormatProfile p = format::detect_profile(upper);
    rec.profile_path = "films/" + rec.film_id + "/profile.json";
    rec.contract_path = "films/" + rec.film_id + "/contract.txt";
    write_json(corpus_dir() / rec.profile_path, json(p));
    corpus::write_file(corpus_dir() / rec.contract_path, format::render_contract(p));
    log() << "[profile] " << rec.film_id << ": scene=" << format::to_string(p.scene_header_style)
          << " dialogue=" << format::to_string(p.dialogue_marker)
          << " stage=" << format::to_string(p.stage_direction_marker)
          << " blank=" << format::to_string(p.blankline_policy) << "\n";
  }
  corpus::build_index(records, index_path());
  manifest_.corpus_index_hash = jsonutil::sha256_hex(corpus::read_file(index_path()));
  mark_complete("profile");
  return true;
}

// ---------------------------------------------------------------------------
// generate

bool Run::generate(const std::string& model) {
  require("profile");
  if (!config_.backends.contains(model)) throw ConfigError("no backend entry for '" + model + "'");
  const std::string stage = "generate:" + model;
  if (!begin_stage(manifest_, stage, options_.force, log())) return false;

  const fs::path out = samples_path(model);
  if (options_.force) fs::remove(out);
  if (fs::exists(out)) jsonutil::repair_jsonl(out);
  std::set<std::pair<std::string, int>> done;
  for (const auto& rec : read_records(out)) done.insert(key_of(rec));

  const auto records = films();
  std::map<std::string, std::pair<std::string, std::string>> inputs;  // upper, contract
  std::vector<Job> jobs;
  for (const auto& rec : records) {
    for (int i = 0; i < config_.generation.samples_per_film; ++i) {
      if (done.count({rec.film_id, i})) continue;
      jobs.push_back({&rec, i});
      if (!inputs.count(rec.film_id)) {
        inputs[rec.film_id] = {corpus::read_file(corpus_dir() / rec.upper_path),
                               corpus::read_file(corpus_dir() / rec.contract_path)};
      }
    }
  }
  if (!done.empty()) log() << "[" << stage << "] resuming; " << done.size() << " samples on disk\n";

  auto chat = make_backend(model);
  const auto bl = blacklist();
  OrderedWriter writer(out, jobs.size());
  std::mutex log_mutex;
  fs::create_directories(out.parent_path());
  genclient::parallel_for(jobs.size(), options_.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto& [upper, contract] = inputs.at(job.film->film_id);
    const auto sample = genclient::continue_script(
        upper, contract, *chat, config_.generation, {model, job.film->film_id, job.sample_idx}, bl);
    json rec = sample;
    rec["run_id"] = manifest_.run_id;
    {
      std::lock_guard lock(log_mutex);
      log() << "[" << stage << "] " << job.film->film_id << "#" << job.sample_idx << ": "
            << genclient::to_string(sample.validity) << " (" << sample.chunk_trace.size()
            << " calls, " << text::char_count(sample.text) << " chars)\n";
    }
    writer.put(i, std::move(rec));
  });
  if (!fs::exists(out)) corpus::write_file(out, "");
  mark_complete(stage);
  return true;
}

// ---------------------------------------------------------------------------
// judge

bool Run::judge(const std::string& model) {
  require("generate:" + model);
  const std::string stage = "judge:" + model;
  if (!begin_stage(manifest_, stage, options_.force, log())) return false;

  const fs::path out = verdicts_path(model);
  if (options_.force) fs::remove(out);
  if (fs::exists(out)) jsonutil::repair_jsonl(out);
  std::set<std::pair<std::string, int>> done;
  for (const auto& rec : read_records(out)) done.insert(key_of(rec));

  judge::JudgePromptOptions popts;
  popts.budget_chars = config_.judge_budget_chars;
  if (!config_.judge_template_path.empty()) {
    popts.template_text = corpus::read_file(config_.resolve(config_.judge_template_path));
  }
  const std::string thash = judge::template_hash(popts);

  std::map<std::string, corpus::FilmRecord> by_id;
  for (auto& r : films()) by_id.emplace(r.film_id, std::move(r));
  const auto samples = read_records(samples_path(model));
  std::vector<const json*> jobs;
  std::map<std::string, std::pair<std::string, format::FormatProfile>> refs;
  for (const auto& s : samples) {
    if (s.value("validity", "") != "VALID" || done.count(key_of(s))) continue;
    const std::string film = s.at("film_id").get<std::string>();
    auto it = by_id.find(film);
    if (it == by_id.end()) throw InputError("sample references unknown film '" + film + "'");
    if (!refs.count(film)) {
      refs[film] = {corpus::read_file(corpus_dir() / it->second.lower_path),
                    read_json(corpus_dir() / it->second.profile_path).get<format::FormatProfile>()};
    }
    jobs.push_back(&s);
  }

  auto chat = make_backend(config_.judge);
  OrderedWriter writer(out, jobs.size());
  std::mutex log_mutex;
  fs::create_directories(out.parent_path());
  genclient::parallel_for(jobs.size(), options_.workers, [&](std::size_t i) {
    const json& s = *jobs[i];
    const std::string film = s.at("film_id").get<std::string>();
    const auto& [reference, profile] = refs.at(film);
    const auto outcome =
        judge::judge_sample(reference, s.at("text").get<std::string>(), profile, *chat, popts,
                            config_.judge_max_reasks, config_.judge_temperature);
    json attempts = json::array();
    for (const auto& a : outcome.attempts) {
      attempts.push_back({{"attempt", a.attempt}, {"status", a.status}, {"error", a.error}});
    }
    json rec{{"run_id", manifest_.run_id},
             {"model_id", model},
             {"film_id", film},
             {"sample_idx", s.at("sample_idx").get<int>()},
             {"judge_id", config_.judge},
             {"template_hash", thash},
             {"ok", outcome.ok()},
             {"verdict", outcome.ok() ? judge::verdict_to_json(*outcome.verdict) : json(nullptr)},
             {"failure", outcome.failure},
             {"raw", outcome.last_raw},
             {"attempts", attempts}};
    {
      std::lock_guard lock(log_mutex);
      log() << "[" << stage << "] " << film << "#" << s.at("sample_idx").get<int>() << ": "
            << (outcome.ok() ? "ok" : outcome.failure) << "\n";
    }
    writer.put(i, std::move(rec));
  });
  if (!fs::exists(out)) corpus::write_file(out, "");
  mark_complete(stage);
  return true;
}

// ---------------------------------------------------------------------------
// score

bool Run::score(const std::string& model) {
  require("judge:" + model);
  const std::string stage = "score:" + model;
  if (!begin_stage(manifest_, stage, options_.force, log())) return false;

  std::optional<metrics::Tokenizer> tokenizer;
  if (config_.tokenizer_mode == metrics::TokenizerMode::Chars) {
    tokenizer = metrics::Tokenizer::chars();
  } else if (config_.dictionary_path.empty()) {
    tokenizer = metrics::Tokenizer::cjk_words();
  } else {
    tokenizer = metrics::Tokenizer::cjk_words(std::make_shared<const metrics::Dictionary>(
        metrics::Dictionary::load(config_.resolve(config_.dictionary_path))));
  }

  std::map<std::pair<std::string, int>, json> verdicts;
  for (auto& v : read_records(verdicts_path(model))) {
    auto key = key_of(v);
    verdicts[key] = std::move(v);
  }

  struct Ref {
    format::FormatProfile profile;
    std::vector<std::string> tokens;
    format::StructuralFeatures features;
  };
  std::map<std::string, Ref> refs;
  for (const auto& rec : films()) {
    Ref r;
    r.profile = read_json(corpus_dir() / rec.profile_path).get<format::FormatProfile>();
    const std::string lower = corpus::read_file(corpus_dir() / rec.lower_path);
    r.tokens = tokenizer->tokenize(lower);
    r.features = format::extract_features(lower, r.profile);
    refs.emplace(rec.film_id, std::move(r));
  }

  std::vector<json> samples;
  for (auto& s : read_records(samples_path(model))) {
    if (s.value("validity", "") == "VALID") samples.push_back(std::move(s));
  }
  std::vector<json> out(samples.size());
  const json weights{{"rouge", config_.weights.rouge},
                     {"structure", config_.weights.structure},
                     {"overall", config_.weights.overall}};
  genclient::parallel_for(samples.size(), options_.workers, [&](std::size_t i) {
    const json& s = samples[i];
    const std::string film = s.at("film_id").get<std::string>();
    const Ref& ref = refs.at(film);
    const std::string gen = s.at("text").get<std::string>();
    const auto tokens = tokenizer->tokenize(gen);
    const auto rouge = metrics::rouge_l(tokens, ref.tokens);
    const auto features = format::extract_features(gen, ref.profile);
    const double ss = metrics::structural_similarity(features, ref.features);

    json rec{{"run_id", manifest_.run_id},
             {"model_id", model},
             {"film_id", film},
             {"sample_idx", s.at("sample_idx").get<int>()},
             {"validity", "VALID"},
             {"rouge", {{"p", rouge.precision}, {"r", rouge.recall}, {"f1", rouge.f1}}},
             {"lcs_len", rouge.lcs_len},
             {"generated_tokens", tokens.size()},
             {"reference_tokens", ref.tokens.size()},
             {"features", features},
             {"reference_features", ref.features},
             {"struct_sim", ss},
             {"tokenizer_mode", metrics::to_string(config_.tokenizer_mode)},
             {"weights", weights}};
    auto v = verdicts.find(key_of(s));
    if (v != verdicts.end() && v->second.value("ok", false)) {
      const json& verdict = v->second.at("verdict");
      json scores = json::object();
      for (const char* k : judge::kScoreKeys) scores[k] = verdict.at(k);
      const double overall = verdict.at("overall_similarity_0_100").get<double>();
      rec["judged"] = true;
      rec["judge_scores"] = scores;
      rec["overall"] = overall;
      rec["composite"] = metrics::composite(rouge.f1, ss, overall, config_.weights);
    } else {
      rec["judged"] = false;
      rec["judge_scores"] = nullptr;
      rec["overall"] = nullptr;
      rec["composite"] = nullptr;
    }
    out[i] = std::move(rec);
  });

  std::string body;
  for (const auto& rec : out) body += rec.dump() + "\n";
  corpus::write_file(scores_path(model), body);
  log() << "[" << stage << "] " << out.size() << " valid samples scored\n";
  mark_complete(stage);
  return true;
}

// ---------------------------------------------------------------------------
// stats

namespace {

const std::vector<std::string> kTestedMetrics{"rouge_l", "struct_sim", "overall", "composite"};

json describe(const std::vector<const stats::ScoredSample*>& rows) {
  json out = json::object();
  for (const auto& m : kTestedMetrics) {
    std::vector<double> v;
    for (const auto* r : rows) {
      if (auto it = r->metrics.find(m); it != r->metrics.end()) v.push_back(it->second);
    }
    out[m] = v.empty() ? json(nullptr) : json(stats::descriptives(v));
  }
  return out;
}

}  // namespace

bool Run::stats() {
  for (const auto& m : config_.models()) require("score:" + m);
  if (!begin_stage(manifest_, "stats", options_.force, log())) return false;

  const auto scores_a = read_records(scores_path(config_.model_a));
  const auto scores_b = read_records(scores_path(config_.model_b));
  const auto sa = report::scored_samples(scores_a);
  const auto sb = report::scored_samples(scores_b);
  const auto pairs = stats::align_pairs(sa, sb);

  json tests = json::array();
  std::vector<std::string> warnings;
  if (pairs.empty()) {
    warnings.push_back("no overlapping valid, judged pairs; no tests were run");
  } else {
    for (const auto& m : kTestedMetrics) {
      try {
        json r = stats::compare_metric(pairs, m);
        r["run_id"] = manifest_.run_id;
        tests.push_back(std::move(r));
      } catch (const StatsError& e) {
        warnings.push_back(m + ": " + e.what());
      }
    }
  }
  for (const auto& w : warnings) log() << "[stats] warning: " << w << "\n";
  write_json(stats_dir() / "stats_report.json", json{{"run_id", manifest_.run_id},
                                                     {"model_a", config_.model_a},
                                                     {"model_b", config_.model_b},
                                                     {"n_pairs", pairs.size()},
                                                     {"tests", tests},
                                                     {"warnings", warnings}});

  json desc = json::object();
  json of_means = json::object();
  for (const auto* side : {&sa, &sb}) {
    const std::string& model = side == &sa ? config_.model_a : config_.model_b;
    std::vector<const stats::ScoredSample*> all, judged, paired;
    for (const auto& s : *side) {
      all.push_back(&s);
      if (s.judged) judged.push_back(&s);
    }
    for (const auto& p : pairs) paired.push_back(side == &sa ? p.a : p.b);
    desc[model] = {{"all_valid", describe(all)}, {"judged", describe(judged)}, {"paired", describe(paired)}};
    json means = desc[model]["paired"];
    if (!paired.empty() && means["overall"].is_object()) {
      of_means[model] = metrics::composite(means["rouge_l"]["mean"].get<double>(),
                                           means["struct_sim"]["mean"].get<double>(),
                                           means["overall"]["mean"].get<double>(), config_.weights);
    } else {
      of_means[model] = nullptr;
    }
  }
  write_json(stats_dir() / "descriptives.json",
             json{{"run_id", manifest_.run_id}, {"descriptives", desc}, {"composite_of_paired_means", of_means}});
  log() << "[stats] " << pairs.size() << " pairs, " << tests.size() << " tests\n";
  mark_complete("stats");
  return true;
}

// ---------------------------------------------------------------------------
// report

bool Run::report() {
  require("stats");
  if (!begin_stage(manifest_, "report", options_.force, log())) return false;

  report::ReportInputs in;
  in.run_id = manifest_.run_id;
  in.model_a = config_.model_a;
  in.model_b = config_.model_b;
  in.theoretical_per_model =
      films().size() * static_cast<std::size_t>(config_.generation.samples_per_film);
  in.samples_a = read_records(samples_path(config_.model_a));
  in.samples_b = read_records(samples_path(config_.model_b));
  in.scores_a = read_records(scores_path(config_.model_a));
  in.scores_b = read_records(scores_path(config_.model_b));
  in.stats_report = read_json(stats_dir() / "stats_report.json");
  if (fs::exists(corpus_dir() / "summary.json")) in.corpus_summary = read_json(corpus_dir() / "summary.json");

  const json desc = read_json(stats_dir() / "descriptives.json");

  fs::remove_all(report_dir());
  std::string md = "# Benchmark report\n\nRun `" + in.run_id + "`: " + in.model_a + " (A) vs " +
                   in.model_b + " (B). Differences are A minus B.\n";
  for (const auto& t : report::emit_tables(in)) {
    md += "\n" + t.to_markdown();
    corpus::write_file(report_dir() / (t.name + ".csv"), t.to_csv(in.run_id));
  }

  // Composite of paired means next to the mean of per-sample composites.
  report::Table check;
  check.name = "composite_check";
  check.title = "Composite cross-check (paired samples)";
  check.header = {"Model", "Mean of per-sample composites", "Composite of component means"};
  for (const auto& m : config_.models()) {
    const json& paired = desc.at("descriptives").at(m).at("paired");
    std::optional<double> mean_c;
    if (paired.at("composite").is_object()) mean_c = paired["composite"]["mean"].get<double>();
    std::optional<double> of_means;
    if (desc.at("composite_of_paired_means").at(m).is_number()) {
      of_means = desc["composite_of_paired_means"][m].get<double>();
    }
    check.rows.push_back({m, report::fmt_fixed(mean_c, 4), report::fmt_fixed(of_means, 4)});
  }
  md += "\n" + check.to_markdown();
  corpus::write_file(report_dir() / (check.name + ".csv"), check.to_csv(in.run_id));
  corpus::write_file(report_dir() / "tables.md", md);

  for (const auto& [name, body] : report::emit_plot_data(in)) {
    corpus::write_file(report_dir() / "plots" / name, body);
  }
  log() << md;
  mark_complete("report");
  return true;
}

void Run::run_all(const fs::path& input_dir) {
  ingest(input_dir);
  profile();
  for (const auto& m : config_.models()) generate(m);
  for (const auto& m : config_.models()) judge(m);
  for (const auto& m : config_.models()) score(m);
  stats();
  report();
}

}  // namespace scriptbench::pipeline
