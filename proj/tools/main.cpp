// gsv: build prompt datasets, run them against backends, and report metrics.

#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "gsv/cli.hpp"

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gender-stereotype verification harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  bool verbose = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "Run directory")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Progress on stderr");

  auto* build = app.add_subcommand("build", "Ingest the taxonomy and write the prompt manifest");

  gsv::cli::RunSelection run_sel;
  std::size_t pairs = 0, occupations = 0, parallelism = 0;
  std::string cache_path;
  auto* run = app.add_subcommand("run", "Execute the protocol against one or more backends");
  run->add_option("--backend", run_sel.backends, "Backend name from the config (repeatable; default all)");
  run->add_option("--pairs", pairs, "Use only the first N subject pairs")->check(CLI::PositiveNumber);
  run->add_option("--occupations", occupations, "Use only the first N occupations")->check(CLI::PositiveNumber);
  run->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--cache-path", cache_path, "Response cache file");

  gsv::cli::ReportSelection report_sel;
  std::vector<std::string> results_paths;
  auto* report = app.add_subcommand("report", "Compute metrics and write report tables");
  report->add_option("--results-path", results_paths, "Result logs to replay instead of the run directory");

  auto* personas = app.add_subcommand("personas", "List built-in persona specs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? gsv::cli::kExitOk : gsv::cli::kExitUsage;
  }

  gsv::cli::Context ctx{std::cout, std::cerr};
  ctx.verbose = verbose;
  ctx.cancel = &g_cancel;
  std::signal(SIGINT, on_sigint);

  if (personas->parsed()) return gsv::cli::cmd_personas(ctx);

  if (config_path.empty()) {
    std::cerr << "error: --config is required for " << app.get_subcommands().front()->get_name() << "\n";
    return gsv::cli::kExitUsage;
  }

  return gsv::cli::guarded(ctx, [&] {
    const auto config = gsv::config::load_config(config_path);
    if (build->parsed()) return gsv::cli::cmd_build(config, out_dir, ctx);
    if (run->parsed()) {
      if (pairs > 0) run_sel.pair_limit = pairs;
      if (occupations > 0) run_sel.occupation_limit = occupations;
      if (parallelism > 0) run_sel.parallelism = parallelism;
      if (!cache_path.empty()) run_sel.cache_path = cache_path;
      return gsv::cli::cmd_run(config, out_dir, run_sel, ctx);
    }
    for (const auto& p : results_paths) report_sel.results_paths.emplace_back(p);
    return gsv::cli::cmd_report(config, out_dir, report_sel, ctx);
  });
}
