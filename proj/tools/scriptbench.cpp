// Command-line driver for the continuation benchmark pipeline.
#include <CLI11.hpp>

#include <iostream>

#include "scriptbench/error.hpp"
#include "scriptbench/pipeline.hpp"

namespace sp = scriptbench::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Screenplay continuation benchmark"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  sp::RunOptions opts;
  std::string out_dir = "runs";
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--run-id", opts.run_id, "Run identifier; outputs go to <out>/<run-id>");
  app.add_option("--out", out_dir, "Output root directory");
  app.add_flag("--force", opts.force, "Redo stages that are already complete");
  app.add_option("--workers", opts.workers, "Concurrent backend calls")->check(CLI::PositiveNumber);
  app.add_option("--rate-limit", opts.rate_limit, "Max calls per second per backend (0 = off)")
      ->check(CLI::NonNegativeNumber);

  std::string input_dir;
  std::string model;
  auto* ingest = app.add_subcommand("ingest", "Clean, split and index a directory of scripts");
  ingest->add_option("dir", input_dir, "Directory of .txt scripts")->required();
  app.add_subcommand("profile", "Detect format profiles and write contracts");
  auto* generate = app.add_subcommand("generate", "Generate continuations");
  auto* judge = app.add_subcommand("judge", "Judge valid continuations");
  auto* score = app.add_subcommand("score", "Compute ROUGE-L, structural similarity and composite");
  for (auto* sub : {generate, judge, score}) {
    sub->add_option("--model", model, "Only this model (default: both)");
  }
  app.add_subcommand("stats", "Paired statistics");
  app.add_subcommand("report", "Tables and plot data");
  auto* run = app.add_subcommand("run", "All stages in order");
  run->add_option("dir", input_dir, "Directory of .txt scripts")->required();

  CLI11_PARSE(app, argc, argv);
  opts.out_dir = out_dir;

  try {
    sp::Run r(sp::RunConfig::load(config_path), opts);
    const auto models = model.empty() ? r.config().models() : std::vector<std::string>{model};
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "ingest") r.ingest(input_dir);
    else if (cmd == "profile") r.profile();
    else if (cmd == "generate") for (const auto& m : models) r.generate(m);
    else if (cmd == "judge") for (const auto& m : models) r.judge(m);
    else if (cmd == "score") for (const auto& m : models) r.score(m);
    else if (cmd == "stats") r.stats();
    else if (cmd == "report") r.report();
    else if (cmd == "run") r.run_all(input_dir);
    std::cerr << "run directory: " << r.dir().string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sp::exit_code_for(e);
  }
  return sp::kExitOk;
}
