#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "scriptbench/error.hpp"
#include "scriptbench/pipeline.hpp"
#include "tempdir.hpp"

using namespace scriptbench;
using namespace scriptbench::pipeline;
using nlohmann::json;
using testutil::TempDir;

namespace {

const fs::path kSource = SCRIPTBENCH_SOURCE_DIR;
const fs::path kCorpus = kSource / "data" / "minicorpus";

void pin_clock() { ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1); }

RunConfig offline_config() { return RunConfig::load(kSource / "configs" / "offline.json"); }

RunOptions options_in(const fs::path& out, std::ostream& log, bool force = false, int workers = 1) {
  RunOptions o;
  o.out_dir = out;
  o.run_id = "t";
  o.force = force;
  o.workers = workers;
  o.log = &log;
  return o;
}

std::vector<json> records(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(testutil::slurp(p));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::vector<std::string> sorted_lines(const std::string& body) {
  std::vector<std::string> lines;
  std::istringstream in(body);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  std::sort(lines.begin(), lines.end());
  return lines;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("exit codes by error class") {
    CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
    CHECK(exit_code_for(DependencyError("ingest", "x")) == kExitDependency);
    CHECK(exit_code_for(TransportError("x")) == kExitTransport);
    CHECK(exit_code_for(InputError("x")) == kExitData);
    CHECK(exit_code_for(EncodingError("x", 3)) == kExitData);
    CHECK(exit_code_for(IoError("x")) == kExitData);
    CHECK(exit_code_for(StatsError("x")) == kExitData);
    CHECK(exit_code_for(VerdictError(VerdictError::Kind::Range, "x")) == kExitData);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitOther);
  }

  TEST_CASE("config validation") {
    const json base = offline_config().raw;
    CHECK_NOTHROW(RunConfig::from_json(base, kSource / "configs"));
    CHECK_THROWS_AS(RunConfig::from_json(json::array(), "."), ConfigError);
    auto bad = base;
    bad["model_b"] = base["model_a"];
    CHECK_THROWS_AS(RunConfig::from_json(bad, "."), ConfigError);
    bad = base;
    bad["model_b"] = "nowhere";
    CHECK_THROWS_AS(RunConfig::from_json(bad, "."), ConfigError);
    bad = base;
    bad["composite_weights"]["rouge"] = 0.5;
    CHECK_THROWS_AS(RunConfig::from_json(bad, "."), ConfigError);
    bad = base;
    bad["generation"]["max_ratio"] = 0.5;
    CHECK_THROWS_AS(RunConfig::from_json(bad, "."), ConfigError);
    bad = base;
    bad["generation"]["samples_per_film"] = "three";
    CHECK_THROWS_AS(RunConfig::from_json(bad, "."), ConfigError);
    bad = base;
    bad["corpus"]["split_ratio"] = 1.0;
    CHECK_THROWS_AS(RunConfig::from_json(bad, "."), ConfigError);
    CHECK_THROWS_AS(RunConfig::load(kSource / "configs" / "missing.json"), ConfigError);

    TempDir tmp("cfg");
    testutil::spit(tmp.path() / "c.json", "{ not json");
    CHECK_THROWS_AS(RunConfig::load(tmp.path() / "c.json"), ConfigError);
  }

  TEST_CASE("run ids must be plain names") {
    TempDir tmp("runid");
    std::ostringstream log;
    auto o = options_in(tmp.path(), log);
    for (const char* id : {"", "..", "a/b"}) {
      o.run_id = id;
      CHECK_THROWS_AS(Run(offline_config(), o), ConfigError);
    }
  }

  TEST_CASE("stages refuse to run before their inputs exist") {
    pin_clock();
    TempDir tmp("deps");
    std::ostringstream log;
    Run run(offline_config(), options_in(tmp.path(), log));
    try {
      run.stats();
      FAIL("stats ran without scores");
    } catch (const DependencyError& e) {
      CHECK(e.stage() == "score:mock-steady");
      CHECK(exit_code_for(e) == kExitDependency);
    }
    CHECK_THROWS_AS(run.profile(), DependencyError);
    CHECK_THROWS_AS(run.report(), DependencyError);
    CHECK_THROWS_AS(run.ingest(tmp.path() / "absent"), InputError);
  }

  TEST_CASE("full offline run") {
    pin_clock();
    TempDir tmp("full");
    std::ostringstream log;
    Run run(offline_config(), options_in(tmp.path(), log));
    run.run_all(kCorpus);

    for (const char* stage : {"ingest", "profile", "generate:mock-steady", "generate:mock-drifty",
                              "judge:mock-steady", "judge:mock-drifty", "score:mock-steady",
                              "score:mock-drifty", "stats", "report"}) {
      CHECK(run.manifest().complete(stage));
    }
    CHECK(run.manifest().created_at == "2023-11-14T22:13:20Z");

    for (const auto& model : run.config().models()) {
      const auto samples = records(run.samples_path(model));
      CHECK(samples.size() == 9);
      std::set<std::pair<std::string, int>> keys;
      std::size_t valid = 0;
      for (const auto& s : samples) {
        keys.insert({s.at("film_id").get<std::string>(), s.at("sample_idx").get<int>()});
        if (s.at("validity") == "VALID") ++valid;
      }
      CHECK(keys.size() == 9);
      CHECK(records(run.scores_path(model)).size() == valid);
      CHECK(records(run.verdicts_path(model)).size() == valid);
    }

    const auto report = json::parse(testutil::slurp(run.stats_dir() / "stats_report.json"));
    CHECK(report.at("n_pairs").get<int>() > 1);
    CHECK(report.at("tests").size() == 4);
    for (const char* f : {"tables.md", "table2_samples.csv", "table5_paired_tests.csv", "plots/forest.csv",
                          "plots/scatter.csv", "plots/quadrants.csv", "plots/perfilm.csv"}) {
      CHECK(fs::exists(run.report_dir() / f));
    }

    // A second call skips every stage.
    CHECK_FALSE(run.ingest(kCorpus));
    CHECK_FALSE(run.generate("mock-steady"));
    CHECK_FALSE(run.report());
  }

  TEST_CASE("identical inputs give byte-identical runs") {
    pin_clock();
    TempDir one("rep1"), two("rep2");
    std::ostringstream log;
    Run(offline_config(), options_in(one.path(), log)).run_all(kCorpus);
    Run(offline_config(), options_in(two.path(), log, false, 4)).run_all(kCorpus);
    const auto a = testutil::read_tree(one.path() / "t");
    const auto b = testutil::read_tree(two.path() / "t");
    CHECK(a.size() > 20);
    CHECK(a == b);
  }

  TEST_CASE("a reopened run must use the same config") {
    pin_clock();
    TempDir tmp("hash");
    std::ostringstream log;
    Run(offline_config(), options_in(tmp.path(), log)).ingest(kCorpus);
    auto changed = offline_config().raw;
    changed["generation"]["temperature"] = 0.9;
    CHECK_THROWS_AS(Run(RunConfig::from_json(changed, kSource / "configs"), options_in(tmp.path(), log)),
                    ConfigError);
    CHECK_NOTHROW(Run(offline_config(), options_in(tmp.path(), log)));
  }

  TEST_CASE("interrupted generation resumes without duplicates") {
    pin_clock();
    TempDir tmp("resume");
    std::ostringstream log;
    fs::path samples;
    std::string complete;
    {
      Run run(offline_config(), options_in(tmp.path(), log));
      run.ingest(kCorpus);
      run.profile();
      run.generate("mock-steady");
      samples = run.samples_path("mock-steady");
      complete = testutil::slurp(samples);
    }
    // Keep four records and a torn fifth, and forget that the stage finished.
    std::size_t cut = 0;
    for (int i = 0; i < 4; ++i) cut = complete.find('\n', cut) + 1;
    testutil::spit(samples, complete.substr(0, cut) + complete.substr(cut, 40));
    const fs::path mpath = tmp.path() / "t" / "manifest.json";
    auto manifest = json::parse(testutil::slurp(mpath));
    manifest["stages"].erase("generate:mock-steady");
    testutil::spit(mpath, manifest.dump(2));

    Run resumed(offline_config(), options_in(tmp.path(), log));
    CHECK(resumed.generate("mock-steady"));
    const std::string after = testutil::slurp(samples);
    CHECK(after.rfind(complete.substr(0, cut), 0) == 0);
    CHECK(sorted_lines(after) == sorted_lines(complete));
    CHECK(log.str().find("resuming; 4 samples on disk") != std::string::npos);
  }

  TEST_CASE("force redoes a stage and invalidates its dependents") {
    pin_clock();
    TempDir tmp("force");
    std::ostringstream log;
    Run(offline_config(), options_in(tmp.path(), log)).run_all(kCorpus);
    const auto before = testutil::read_tree(tmp.path() / "t" / "samples");

    Run forced(offline_config(), options_in(tmp.path(), log, true));
    CHECK(forced.generate("mock-steady"));
    const auto& m = forced.manifest();
    CHECK(m.complete("generate:mock-steady"));
    CHECK_FALSE(m.complete("judge:mock-steady"));
    CHECK_FALSE(m.complete("score:mock-steady"));
    CHECK_FALSE(m.complete("stats"));
    CHECK_FALSE(m.complete("report"));
    CHECK(m.complete("generate:mock-drifty"));
    CHECK(m.complete("score:mock-drifty"));
    CHECK(testutil::read_tree(tmp.path() / "t" / "samples") == before);
    CHECK_THROWS_AS(forced.stats(), DependencyError);
  }

  TEST_CASE("stats and report regenerate byte-identically") {
    pin_clock();
    TempDir tmp("regen");
    std::ostringstream log;
    Run(offline_config(), options_in(tmp.path(), log)).run_all(kCorpus);
    const fs::path dir = tmp.path() / "t";
    const auto stats_before = testutil::read_tree(dir / "stats");
    const auto report_before = testutil::read_tree(dir / "report");
    fs::remove_all(dir / "report");
    fs::remove_all(dir / "stats");

    Run again(offline_config(), options_in(tmp.path(), log, true));
    CHECK(again.stats());
    CHECK(again.report());
    CHECK(testutil::read_tree(dir / "stats") == stats_before);
    CHECK(testutil::read_tree(dir / "report") == report_before);
  }

  TEST_CASE("zero overlapping pairs gives a warning and no tests") {
    pin_clock();
    TempDir tmp("zero");
    std::ostringstream log;
    auto raw = offline_config().raw;
    raw["backends"]["mock-drifty"]["timeout_rate"] = 1.0;
    Run run(RunConfig::from_json(raw, kSource / "configs"), options_in(tmp.path(), log));
    run.run_all(kCorpus);
    const auto report = json::parse(testutil::slurp(run.stats_dir() / "stats_report.json"));
    CHECK(report.at("n_pairs") == 0);
    CHECK(report.at("tests").empty());
    REQUIRE(report.at("warnings").size() == 1);
    CHECK(log.str().find("[stats] warning") != std::string::npos);
    const std::string md = testutil::slurp(run.report_dir() / "tables.md");
    CHECK(md.find("| Validity Rate | 100.0% | 0.0% | 50.0% |") != std::string::npos);
    CHECK(md.find("| Invalid: API_TIMEOUT | 0 | 9 | 9 |") != std::string::npos);
    CHECK(md.find("Warning: no overlapping") != std::string::npos);
  }
}
