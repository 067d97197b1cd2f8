#include "gsv/cli.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "gsv/orchestrator.hpp"
#include "gsv/report.hpp"
#include "gsv/taxonomy.hpp"
#include "gsv/text.hpp"

namespace gsv::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::filesystem::path RunLayout::run_dir(std::string_view backend_name) const {
  return root / "runs" / report::file_component(backend_name);
}

std::unique_ptr<backend::Backend> make_backend(const config::BackendConfig& b) {
  switch (b.kind) {
    case backend::BackendKind::Persona:
      return backend::make_persona(*b.persona, b.name, b.version);
    case backend::BackendKind::HttpChat:
      return std::make_unique<backend::HttpChatBackend>(b.id(), *b.http);
    case backend::BackendKind::External:
      break;
  }
  throw UsageError("backend " + b.name + " has no built-in implementation");
}

int guarded(Context& ctx, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

namespace {

void write_json(const fs::path& path, const ordered_json& j) { report::write_file(path, j.dump(2) + '\n'); }

dataset::PromptRenderer renderer_for(const config::RunConfig& config) {
  return dataset::PromptRenderer(config.templates);
}

void require_file(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) throw IoError(path.string(), "missing (" + hint + ")");
}

}  // namespace

// --- build ----------------------------------------------------------------------

int cmd_build(const config::RunConfig& config, const fs::path& out_dir, Context& ctx) {
  const RunLayout layout{out_dir};
  taxonomy::ParseOptions parse;
  parse.ranking_scale = config.taxonomy.ranking_scale;
  auto db = taxonomy::parse_attribute_tables(config.taxonomy.skills, config.taxonomy.knowledge,
                                             config.taxonomy.abilities, parse);
  if (config.taxonomy.alternate_titles) taxonomy::load_alternate_titles(db, *config.taxonomy.alternate_titles);

  const auto match = taxonomy::match_occupations(config.occupations, db);
  for (const auto& title : match.unmatched) ctx.err << "warning: no taxonomy occupation matches '" << title << "'\n";
  if (match.matched.empty()) throw ValidationError("no configured occupation matched the taxonomy");

  std::vector<taxonomy::Occupation> occupations;
  for (const auto& m : match.matched) {
    auto occ = taxonomy::resolve_occupation(db, m, config.taxonomy.top_k);
    if (!occ.complete() && ctx.verbose) {
      ctx.err << "note: " << occ.title << " (" << occ.soc_code << ") has " << occ.attributes.size()
              << " attributes\n";
    }
    occupations.push_back(std::move(occ));
  }

  const auto pairs = dataset::make_pairs(config.female_names, config.male_names, config.pairing);
  const auto manifest = dataset::build_dataset(pairs, occupations, renderer_for(config));

  fs::create_directories(layout.root);
  taxonomy::write_snapshot(layout.snapshot(), occupations);
  dataset::write_manifest(layout.manifest(), manifest);

  ordered_json info;
  info["config_digest"] = config.digest;
  info["pairs"] = manifest.pair_count;
  info["occupations"] = manifest.occupation_count;
  info["attributes"] = manifest.attribute_total;
  info["instances"] = manifest.size();
  info["unmatched"] = match.unmatched;
  write_json(layout.build_info(), info);

  ctx.out << "instances: " << manifest.size() << " = pairs " << manifest.pair_count << " x (2 x " << manifest.attribute_total
          << " attributes + 4 x " << manifest.occupation_count << " occupations)\n";
  ctx.out << "manifest: " << layout.manifest().string() << '\n';
  return kExitOk;
}

// --- run ------------------------------------------------------------------------

int cmd_run(const config::RunConfig& config, const fs::path& out_dir, const RunSelection& selection, Context& ctx) {
  const RunLayout layout{out_dir};

  std::vector<const config::BackendConfig*> chosen;
  if (selection.backends.empty()) {
    for (const auto& b : config.backends) chosen.push_back(&b);
  } else {
    for (const auto& name : selection.backends) {
      const auto* b = config.find_backend(name);
      if (b == nullptr) {
        std::vector<std::string> known;
        for (const auto& k : config.backends) known.push_back(k.name);
        throw UsageError("unknown backend '" + name + "' (configured: " + text::join(known, ", ") + ")");
      }
      chosen.push_back(b);
    }
  }

  require_file(layout.manifest(), "run the build stage first");
  require_file(layout.snapshot(), "run the build stage first");
  auto occupations = taxonomy::read_snapshot(layout.snapshot());
  auto pairs = dataset::make_pairs(config.female_names, config.male_names, config.pairing);
  if (selection.occupation_limit && *selection.occupation_limit < occupations.size()) {
    occupations.resize(*selection.occupation_limit);
  }
  if (selection.pair_limit && *selection.pair_limit < pairs.size()) {
    pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(*selection.pair_limit), pairs.end());
  }

  const auto cache_path = selection.cache_path.value_or(config.cache_path.value_or(layout.default_cache()));
  if (cache_path.has_parent_path()) fs::create_directories(cache_path.parent_path());
  backend::ResponseCache cache(cache_path);
  const auto renderer = renderer_for(config);

  orchestrator::SuiteOptions suite;
  suite.parallelism = selection.parallelism.value_or(config.parallelism);
  suite.failure_threshold = config.failure_threshold;
  suite.cancel = ctx.cancel;
  if (suite.parallelism == 0) throw UsageError("--parallelism must be >= 1");

  int status = kExitOk;
  for (const auto* bc : chosen) {
    auto impl = ctx.factory(*bc);
    backend::ServiceOptions service_options;
    service_options.retry.max_attempts = config.max_attempts;
    service_options.requests_per_second = config.requests_per_second;
    service_options.seed = config.seed;
    backend::AnswerService service(*impl, cache, service_options);

    if (ctx.verbose) {
      ctx.err << "running " << impl->id().str() << " on " << pairs.size() << " pairs x " << occupations.size()
              << " occupations\n";
    }
    const auto outcome = orchestrator::run_suite(service, renderer, pairs, occupations, suite);
    const auto backend_id = impl->id().str();
    orchestrator::write_results(layout.results(bc->name), outcome.results, backend_id);
    orchestrator::write_records(layout.records(bc->name), outcome.records);

    const auto& s = outcome.summary;
    ordered_json meta;
    meta["backend_id"] = backend_id;
    meta["config_digest"] = config.digest;
    meta["temperature"] = bc->http ? ordered_json(bc->http->temperature) : ordered_json(nullptr);
    meta["parallelism"] = suite.parallelism;
    meta["pairs"] = pairs.size();
    meta["occupations"] = occupations.size();
    meta["cells_total"] = s.cells_total;
    meta["cells_completed"] = s.cells_completed;
    meta["cells_failed"] = s.cells_failed;
    meta["cells_not_run"] = s.cells_not_run;
    meta["background_skips"] = s.background_skips;
    meta["normalization_skips"] = s.normalization_skips;
    meta["backend_calls"] = s.backend_calls;
    meta["cache_hits"] = s.cache_hits;
    meta["failure_ratio"] = s.failure_ratio;
    meta["failure_threshold"] = suite.failure_threshold;
    meta["failed"] = s.failed;
    meta["interrupted"] = s.interrupted;
    meta["failures"] = ordered_json::array();
    for (const auto& f : outcome.failures) {
      meta["failures"].push_back({{"occupation", f.occupation_title}, {"pair", f.pair_id}, {"message", f.message}});
    }
    meta["finished_at"] = text::utc_timestamp();
    write_json(layout.metadata(bc->name), meta);

    ctx.out << backend_id << ": " << s.cells_completed << "/" << s.cells_total << " cells, " << s.cells_failed
            << " failed, " << s.backend_calls << " backend calls, " << s.cache_hits << " cache hits, "
            << s.normalization_skips << " unparsed answers\n";

    if (s.interrupted) {
      ctx.err << "interrupted: " << s.cells_not_run << " cells not run; re-run to resume from the cache\n";
      return kExitInterrupted;
    }
    if (s.failed) {
      ctx.err << backend_id << ": failure ratio " << text::format_ratio(s.failure_ratio) << " exceeds threshold "
              << text::format_ratio(suite.failure_threshold) << '\n';
      for (const auto& f : outcome.failures) {
        ctx.err << "  " << f.occupation_title << " " << f.pair_id << ": " << f.message << '\n';
      }
      status = kExitFailureThreshold;
    }
  }
  cache.flush();
  return status;
}

// --- report ---------------------------------------------------------------------

int cmd_report(const config::RunConfig& config, const fs::path& out_dir, const ReportSelection& selection,
               Context& ctx) {
  const RunLayout layout{out_dir};
  std::vector<fs::path> sources = selection.results_paths;
  if (sources.empty()) {
    for (const auto& b : config.backends) {
      if (fs::exists(layout.results(b.name))) sources.push_back(layout.results(b.name));
    }
    if (sources.empty()) throw NotFoundError("no results under " + (layout.root / "runs").string() + "; run first");
  }

  std::map<std::string, std::vector<orchestrator::ProtocolResult>> by_backend;
  for (const auto& path : sources) {
    require_file(path, "results log");
    for (auto& logged : orchestrator::read_results(path)) {
      by_backend[logged.backend].push_back(std::move(logged.result));
    }
  }

  std::vector<metrics::MetricRow> rows;
  std::map<std::string, metrics::AnswerRatios> ratios;
  std::map<std::string, double> thresholds;
  std::vector<report::ScatterKey> expected;
  for (auto& [backend_id, results] : by_backend) {
    auto part = metrics::compute_metric_rows(results, backend_id, config.metric_options);
    rows.insert(rows.end(), part.begin(), part.end());
    ratios[backend_id] = metrics::answer_ratios(results);

    double threshold = config.default_threshold;
    for (const auto& b : config.backends) {
      if (b.id().str() == backend_id) threshold = config.threshold_for(b.name);
    }
    thresholds[backend_id] = threshold;

    std::set<metrics::Setting> settings;
    for (const auto& r : results) settings.insert(metrics::setting_of(r));
    for (auto s : settings) expected.push_back({backend_id, s});
  }

  const auto dir = layout.report_dir();
  report::write_file(dir / "metrics.csv", metrics::metric_rows_csv(rows));
  report::write_file(dir / "metrics.jsonl", metrics::metric_rows_jsonl(rows));
  auto written = report::emit_scatter_data(rows, dir, expected);
  const auto bias = report::emit_bias_tables(rows, thresholds, dir);
  const auto answers = report::emit_answer_ratio_table(ratios, dir);
  written.insert(written.end(), bias.begin(), bias.end());
  written.insert(written.end(), answers.begin(), answers.end());

  for (const auto& [backend_id, results] : by_backend) {
    std::size_t n = 0;
    std::size_t skipped = 0;
    for (const auto& r : rows) {
      if (r.backend != backend_id) continue;
      ++n;
      skipped += r.n_skipped;
    }
    ctx.out << backend_id << ": " << results.size() << " cells, " << n << " metric rows, " << skipped
            << " skipped cells\n";
  }
  ctx.out << "report: " << dir.string() << " (" << written.size() + 2 << " files)\n";
  return kExitOk;
}

int cmd_personas(Context& ctx) {
  for (const auto& [name, spec] : backend::builtin_personas()) {
    ctx.out << name << ' ' << backend::persona_spec_to_json(spec).dump() << '\n';
  }
  return kExitOk;
}

}  // namespace gsv::cli
