#include "gsv/orchestrator.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "gsv/errors.hpp"
#include "gsv/text.hpp"

namespace gsv::orchestrator {

namespace fs = std::filesystem;
using dataset::Gender;
using dataset::PromptInstance;
using dataset::Step;
using ojson = nlohmann::ordered_json;

std::string_view flag_name(Flag f) {
  switch (f) {
    case Flag::EmptyProfileFirst: return "empty_profile_first";
    case Flag::EmptyProfileSecond: return "empty_profile_second";
    case Flag::NormalizationSkip: return "normalization_skip";
  }
  return "normalization_skip";
}

Flag parse_flag(std::string_view s) {
  if (s == "empty_profile_first") return Flag::EmptyProfileFirst;
  if (s == "empty_profile_second") return Flag::EmptyProfileSecond;
  if (s == "normalization_skip") return Flag::NormalizationSkip;
  throw ValidationError("unknown result flag: " + std::string(s));
}

const std::optional<std::string>& ProtocolResult::r_binary(const Subject& s) const {
  static const std::optional<std::string> kNone;
  if (s == pair.first()) return r_binary_first;
  if (s == pair.second()) return r_binary_second;
  return kNone;
}

// --- single cell ------------------------------------------------------------------

ProtocolRunner::ProtocolRunner(backend::AnswerService& service, const dataset::PromptRenderer& renderer)
    : service_(service), renderer_(renderer) {}

std::optional<std::string> ProtocolRunner::ask(const PromptInstance& prompt, std::vector<RunRecord>* records) {
  RunRecord rec;
  rec.prompt_id = prompt.id;
  rec.step = prompt.step;
  rec.backend_id = service_.backend_id().str();
  try {
    auto answer = service_.ask(prompt);
    rec.raw = std::move(answer.raw);
    rec.canonical = answer.canonical;
    rec.from_cache = answer.from_cache;
  } catch (const NoMatchError& e) {
    rec.raw = e.raw();
  }
  rec.timestamp = text::utc_timestamp();
  auto canonical = rec.canonical;
  if (records != nullptr) records->push_back(std::move(rec));
  return canonical;
}

std::pair<BackgroundProfile, BackgroundProfile> ProtocolRunner::run_step1(const SubjectPair& pair,
                                                                          const taxonomy::Occupation& occupation,
                                                                          std::vector<RunRecord>* records,
                                                                          std::size_t* skips) {
  const auto& affirmative = renderer_.affirmative_background_label();
  auto probe = [&](const Subject& subject) {
    BackgroundProfile profile{subject, occupation.title, {}};
    for (const auto& attribute : occupation.attributes) {
      auto label = ask(renderer_.background(pair, subject, occupation.title, attribute), records);
      if (!label) {
        if (skips != nullptr) ++*skips;
        continue;
      }
      if (*label == affirmative) profile.confirmed.push_back(attribute);
    }
    return profile;
  };
  auto first = probe(pair.first());
  auto second = probe(pair.second());
  return {std::move(first), std::move(second)};
}

ProtocolResult ProtocolRunner::run_protocol(const SubjectPair& pair, const taxonomy::Occupation& occupation,
                                            std::vector<RunRecord>* records) {
  ProtocolResult r;
  r.pair = pair;
  r.occupation_title = occupation.title;
  std::tie(r.profile_first, r.profile_second) = run_step1(pair, occupation, records, &r.background_skips);
  if (r.profile_first.confirmed.empty()) r.flags.insert(Flag::EmptyProfileFirst);
  if (r.profile_second.confirmed.empty()) r.flags.insert(Flag::EmptyProfileSecond);

  r.r_binary_first = ask(renderer_.q1(pair, pair.first(), occupation.title, r.profile_first), records);
  r.r_binary_second = ask(renderer_.q1(pair, pair.second(), occupation.title, r.profile_second), records);
  r.r_single = ask(renderer_.q2(pair, occupation.title, r.profile_first, r.profile_second), records);
  r.r_multi = ask(renderer_.q3(pair, occupation.title, r.profile_first, r.profile_second), records);
  if (!r.r_binary_first || !r.r_binary_second || !r.r_single || !r.r_multi) r.flags.insert(Flag::NormalizationSkip);
  return r;
}

// --- suite ------------------------------------------------------------------------

namespace {

struct CellOutcome {
  bool ran = false;
  std::optional<ProtocolResult> result;
  std::vector<RunRecord> records;
  std::optional<std::string> failure;
};

}  // namespace

SuiteOutcome run_suite(backend::AnswerService& service, const dataset::PromptRenderer& renderer,
                       const std::vector<SubjectPair>& pairs, const std::vector<taxonomy::Occupation>& occupations,
                       const SuiteOptions& options) {
  if (options.parallelism < 1) throw ValidationError("parallelism must be at least 1");

  struct Cell {
    const SubjectPair* pair;
    const taxonomy::Occupation* occupation;
  };
  std::vector<Cell> cells;
  for (const auto& o : occupations) {
    for (const auto& p : pairs) cells.push_back({&p, &o});
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::forward_as_tuple(a.occupation->title, a.pair->id()) <
           std::forward_as_tuple(b.occupation->title, b.pair->id());
  });

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  const auto calls_before = service.backend_calls();

  auto worker = [&] {
    ProtocolRunner runner(service, renderer);
    while (true) {
      if (options.cancel != nullptr && options.cancel->load()) return;
      {
        std::lock_guard lock(fatal_mutex);
        if (fatal) return;
      }
      const auto i = next.fetch_add(1);
      if (i >= cells.size()) return;
      auto& out = outcomes[i];
      out.ran = true;
      try {
        out.result = runner.run_protocol(*cells[i].pair, *cells[i].occupation, &out.records);
      } catch (const BackendError& e) {
        out.failure = e.what();
        out.records.clear();
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    const auto n = std::min(options.parallelism, std::max<std::size_t>(cells.size(), 1));
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  SuiteOutcome suite;
  auto& s = suite.summary;
  s.backend_id = service.backend_id().str();
  s.cells_total = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& out = outcomes[i];
    if (!out.ran) {
      ++s.cells_not_run;
      continue;
    }
    if (out.failure) {
      ++s.cells_failed;
      suite.failures.push_back({cells[i].occupation->title, cells[i].pair->id(), *out.failure});
      continue;
    }
    ++s.cells_completed;
    s.background_skips += out.result->background_skips;
    for (auto& rec : out.records) {
      if (!rec.canonical) ++s.normalization_skips;
      if (rec.from_cache) ++s.cache_hits;
      suite.records.push_back(std::move(rec));
    }
    suite.results.push_back(std::move(*out.result));
  }
  std::sort(suite.records.begin(), suite.records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.prompt_id < b.prompt_id; });
  s.backend_calls = service.backend_calls() - calls_before;
  s.interrupted = s.cells_not_run > 0;
  s.failure_ratio = s.cells_total == 0 ? 0.0 : static_cast<double>(s.cells_failed) / static_cast<double>(s.cells_total);
  s.failed = s.failure_ratio > options.failure_threshold;
  return suite;
}

// --- persistence --------------------------------------------------------------------

namespace {

ojson subject_json(const Subject& s) {
  ojson j;
  j["name"] = s.given_name;
  j["gender"] = dataset::gender_name(s.gender);
  return j;
}

Subject subject_from_json(const nlohmann::json& j) {
  return Subject{j.at("name").get<std::string>(), dataset::parse_gender(j.at("gender").get<std::string>())};
}

ojson profile_json(const BackgroundProfile& p) {
  auto arr = ojson::array();
  for (const auto& a : p.confirmed) {
    ojson aj;
    aj["name"] = a.name;
    aj["category"] = taxonomy::category_name(a.category);
    arr.push_back(std::move(aj));
  }
  return arr;
}

BackgroundProfile profile_from_json(const nlohmann::json& j, const Subject& s, const std::string& occupation) {
  BackgroundProfile p{s, occupation, {}};
  for (const auto& aj : j) {
    taxonomy::Attribute a;
    a.name = aj.at("name").get<std::string>();
    a.category = taxonomy::parse_category(aj.at("category").get<std::string>());
    p.confirmed.push_back(std::move(a));
  }
  return p;
}

ojson optional_json(const std::optional<std::string>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<std::string> optional_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string result_line(const ProtocolResult& r, std::string_view backend) {
  ojson j;
  j["backend"] = backend;
  j["occupation"] = r.occupation_title;
  j["first"] = subject_json(r.pair.first());
  j["second"] = subject_json(r.pair.second());
  j["same_gender"] = r.pair.same_gender();
  j["profile_first"] = profile_json(r.profile_first);
  j["profile_second"] = profile_json(r.profile_second);
  j["r_binary_first"] = optional_json(r.r_binary_first);
  j["r_binary_second"] = optional_json(r.r_binary_second);
  j["r_single"] = optional_json(r.r_single);
  j["r_multi"] = optional_json(r.r_multi);
  auto flags = ojson::array();
  for (auto f : r.flags) flags.push_back(flag_name(f));
  j["flags"] = std::move(flags);
  j["background_skips"] = r.background_skips;
  return j.dump();
}

LoggedResult parse_result_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    LoggedResult out;
    out.backend = j.value("backend", "");
    auto& r = out.result;
    r.occupation_title = j.at("occupation").get<std::string>();
    r.pair = SubjectPair::make(subject_from_json(j.at("first")), subject_from_json(j.at("second")));
    r.profile_first = profile_from_json(j.value("profile_first", nlohmann::json::array()), r.pair.first(),
                                        r.occupation_title);
    r.profile_second = profile_from_json(j.value("profile_second", nlohmann::json::array()), r.pair.second(),
                                         r.occupation_title);
    r.r_binary_first = optional_from_json(j, "r_binary_first");
    r.r_binary_second = optional_from_json(j, "r_binary_second");
    r.r_single = optional_from_json(j, "r_single");
    r.r_multi = optional_from_json(j, "r_multi");
    if (j.contains("flags")) {
      for (const auto& f : j.at("flags")) r.flags.insert(parse_flag(f.get<std::string>()));
    }
    if (!r.r_binary_first || !r.r_binary_second || !r.r_single || !r.r_multi) r.flags.insert(Flag::NormalizationSkip);
    r.background_skips = j.value("background_skips", std::size_t{0});
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("results", 0, e.what());
  } catch (const ValidationError& e) {
    throw FormatError("results", 0, e.what());
  }
}

std::string record_line(const RunRecord& rec) {
  ojson j;
  j["prompt_id"] = rec.prompt_id;
  j["step"] = dataset::step_name(rec.step);
  j["backend"] = rec.backend_id;
  j["raw"] = rec.raw;
  j["canonical"] = optional_json(rec.canonical);
  j["from_cache"] = rec.from_cache;
  j["timestamp"] = rec.timestamp;
  return j.dump();
}

void write_results(const fs::path& path, const std::vector<ProtocolResult>& results, std::string_view backend) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot write file");
  for (const auto& r : results) out << result_line(r, backend) << '\n';
}

std::vector<LoggedResult> read_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string());
  std::vector<LoggedResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse_result_line(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string(), line_no, e.what());
    }
  }
  return out;
}

void write_records(const fs::path& path, const std::vector<RunRecord>& records) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot write file");
  for (const auto& r : records) out << record_line(r) << '\n';
}

}  // namespace gsv::orchestrator
