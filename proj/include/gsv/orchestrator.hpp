#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gsv/backend.hpp"
#include "gsv/dataset.hpp"
#include "gsv/taxonomy.hpp"

namespace gsv::orchestrator {

using dataset::BackgroundProfile;
using dataset::Subject;
using dataset::SubjectPair;

enum class Flag { EmptyProfileFirst, EmptyProfileSecond, NormalizationSkip };

std::string_view flag_name(Flag f);
Flag parse_flag(std::string_view s);

/// The four answers for one (pair, occupation) cell.
struct ProtocolResult {
  SubjectPair pair = SubjectPair::make({"a", dataset::Gender::Female}, {"b", dataset::Gender::Male});
  std::string occupation_title;
  BackgroundProfile profile_first;
  BackgroundProfile profile_second;
  std::optional<std::string> r_binary_first;   // Q1 for pair.first()
  std::optional<std::string> r_binary_second;  // Q1 for pair.second()
  std::optional<std::string> r_single;         // Q2
  std::optional<std::string> r_multi;          // Q3
  std::set<Flag> flags;
  /// Step-1 answers that could not be normalized (excluded from the profiles).
  std::size_t background_skips = 0;

  const std::optional<std::string>& r_binary(const Subject& s) const;
  bool has(Flag f) const { return flags.count(f) != 0; }
};

struct RunRecord {
  std::string prompt_id;
  dataset::Step step = dataset::Step::Background;
  std::string backend_id;
  std::string raw;
  std::optional<std::string> canonical;  // absent when normalization failed
  bool from_cache = false;
  std::string timestamp;
};

/// Runs the protocol for single cells. Steps within a cell are strictly sequential.
class ProtocolRunner {
 public:
  ProtocolRunner(backend::AnswerService& service, const dataset::PromptRenderer& renderer);

  /// Asks every attribute for both subjects; confirmed = answered with the
  /// affirmative background label. Throws BackendError.
  std::pair<BackgroundProfile, BackgroundProfile> run_step1(const SubjectPair& pair,
                                                            const taxonomy::Occupation& occupation,
                                                            std::vector<RunRecord>* records = nullptr,
                                                            std::size_t* skips = nullptr);

  /// Step 1, then Q1 per subject on its own profile, then Q2 and Q3. Throws BackendError.
  ProtocolResult run_protocol(const SubjectPair& pair, const taxonomy::Occupation& occupation,
                              std::vector<RunRecord>* records = nullptr);

 private:
  /// Canonical label, or nullopt when the answer did not normalize.
  std::optional<std::string> ask(const dataset::PromptInstance& prompt, std::vector<RunRecord>* records);

  backend::AnswerService& service_;
  const dataset::PromptRenderer& renderer_;
};

struct SuiteOptions {
  std::size_t parallelism = 1;
  /// The run fails when failed cells / total cells exceeds this.
  double failure_threshold = 0.0;
  /// When set, workers stop picking up new cells.
  const std::atomic<bool>* cancel = nullptr;
};

struct CellFailure {
  std::string occupation_title;
  std::string pair_id;
  std::string message;
};

struct SuiteSummary {
  std::string backend_id;
  std::size_t cells_total = 0;
  std::size_t cells_completed = 0;
  std::size_t cells_failed = 0;
  std::size_t cells_not_run = 0;  // skipped after cancellation
  std::size_t background_skips = 0;
  std::size_t normalization_skips = 0;  // records whose answer did not normalize
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  double failure_ratio = 0.0;
  bool failed = false;
  bool interrupted = false;
};

struct SuiteOutcome {
  std::vector<ProtocolResult> results;  // sorted by (occupation, pair id)
  std::vector<RunRecord> records;       // sorted by prompt id
  std::vector<CellFailure> failures;    // sorted by (occupation, pair id)
  SuiteSummary summary;
};

/// Executes every (pair, occupation) cell once on a bounded worker pool.
/// Failed cells are dropped whole and reported in the summary.
SuiteOutcome run_suite(backend::AnswerService& service, const dataset::PromptRenderer& renderer,
                       const std::vector<SubjectPair>& pairs, const std::vector<taxonomy::Occupation>& occupations,
                       const SuiteOptions& options = {});

// --- persistence ----------------------------------------------------------------

struct LoggedResult {
  std::string backend;
  ProtocolResult result;
};

std::string result_line(const ProtocolResult& result, std::string_view backend);
LoggedResult parse_result_line(std::string_view line);
std::string record_line(const RunRecord& record);

void write_results(const std::filesystem::path& path, const std::vector<ProtocolResult>& results,
                   std::string_view backend);
std::vector<LoggedResult> read_results(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<RunRecord>& records);

}  // namespace gsv::orchestrator
