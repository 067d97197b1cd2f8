#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gsv/config.hpp"
#include "gsv/errors.hpp"

namespace gsv::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitFailureThreshold = 3,
  kExitInterrupted = 130,
};

/// Bad command-line input (unknown backend name and the like).
class UsageError : public Error {
 public:
  using Error::Error;
};

using BackendFactory = std::function<std::unique_ptr<backend::Backend>(const config::BackendConfig&)>;

/// Persona or HTTP backend for a config entry.
std::unique_ptr<backend::Backend> make_backend(const config::BackendConfig& b);

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool verbose = false;
  BackendFactory factory = make_backend;
  const std::atomic<bool>* cancel = nullptr;
};

/// Fixed file names inside the run directory.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path snapshot() const { return root / "taxonomy_snapshot.jsonl"; }
  std::filesystem::path manifest() const { return root / "manifest.jsonl"; }
  std::filesystem::path build_info() const { return root / "build.json"; }
  std::filesystem::path default_cache() const { return root / "cache.jsonl"; }
  std::filesystem::path run_dir(std::string_view backend_name) const;
  std::filesystem::path results(std::string_view backend_name) const { return run_dir(backend_name) / "results.jsonl"; }
  std::filesystem::path records(std::string_view backend_name) const { return run_dir(backend_name) / "records.jsonl"; }
  std::filesystem::path metadata(std::string_view backend_name) const { return run_dir(backend_name) / "metadata.json"; }
  std::filesystem::path report_dir() const { return root / "report"; }
};

struct RunSelection {
  std::vector<std::string> backends;  // empty: every configured backend
  std::optional<std::size_t> pair_limit;
  std::optional<std::size_t> occupation_limit;
  std::optional<std::size_t> parallelism;
  std::optional<std::filesystem::path> cache_path;
};

struct ReportSelection {
  /// Result logs to read instead of the run directory's (log replay).
  std::vector<std::filesystem::path> results_paths;
};

/// Each returns an exit code; data errors propagate as gsv::Error.
int cmd_build(const config::RunConfig& config, const std::filesystem::path& out_dir, Context& ctx);
int cmd_run(const config::RunConfig& config, const std::filesystem::path& out_dir, const RunSelection& selection,
            Context& ctx);
int cmd_report(const config::RunConfig& config, const std::filesystem::path& out_dir,
               const ReportSelection& selection, Context& ctx);
int cmd_personas(Context& ctx);

/// Runs `body`, mapping UsageError to 1 and other harness errors to 2, with the message on ctx.err.
int guarded(Context& ctx, const std::function<int()>& body);

}  // namespace gsv::cli
