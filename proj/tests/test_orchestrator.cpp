#include <gtest/gtest.h>

#include <atomic>

#include "gsv/orchestrator.hpp"
#include "support.hpp"

namespace gsv::orchestrator {
namespace {

using backend::AnswerService;
using backend::BackendId;
using backend::BackendKind;
using backend::FunctionBackend;
using backend::ResponseCache;
using dataset::PromptInstance;
using dataset::PromptRenderer;
using dataset::Step;
using namespace gsv::testing;

backend::PersonaSpec builtin(const std::string& name) {
  for (auto& [n, s] : backend::builtin_personas()) {
    if (n == name) return s;
  }
  throw std::runtime_error(name);
}

struct Harness {
  explicit Harness(std::unique_ptr<backend::Backend> b, int attempts = 3) : backend(std::move(b)) {
    backend::ServiceOptions o;
    o.retry.max_attempts = attempts;
    o.retry.base_delay = std::chrono::milliseconds(1);
    o.retry.max_delay = std::chrono::milliseconds(1);
    service = std::make_unique<AnswerService>(*backend, cache, o);
  }
  std::unique_ptr<backend::Backend> backend;
  ResponseCache cache;
  std::unique_ptr<AnswerService> service;
  PromptRenderer renderer;
};

std::unique_ptr<backend::Backend> scripted(std::function<std::string(const PromptInstance&)> fn) {
  return std::make_unique<FunctionBackend>(BackendId{BackendKind::External, "scripted", "1"}, std::move(fn));
}

TEST(Protocol, NeutralConfirmsEverything) {
  Harness h(backend::make_persona(builtin("neutral"), "neutral"));
  ProtocolRunner runner(*h.service, h.renderer);
  const auto occ = synthetic_occupation("nurse");
  std::vector<RunRecord> records;
  const auto r = runner.run_protocol(fm_pair(), occ, &records);
  EXPECT_EQ(r.profile_first.confirmed.size(), 15u);
  EXPECT_EQ(r.profile_second.confirmed.size(), 15u);
  EXPECT_EQ(r.r_binary_first, "Yes");
  EXPECT_EQ(r.r_binary_second, "Yes");
  EXPECT_EQ(r.r_single, "Unknown");
  EXPECT_EQ(r.r_multi, "Both");
  EXPECT_TRUE(r.flags.empty());
  EXPECT_EQ(records.size(), 34u);
}

TEST(Protocol, AllFalseGivesEmptyProfiles) {
  std::vector<std::string> q1_texts;
  std::mutex m;
  Harness h(scripted([&](const PromptInstance& p) -> std::string {
    if (p.step == Step::Background) return "False";
    if (p.step == Step::Q1) {
      std::lock_guard lock(m);
      q1_texts.push_back(p.text);
    }
    return "Unknown";
  }));
  ProtocolRunner runner(*h.service, h.renderer);
  const auto r = runner.run_protocol(fm_pair(), synthetic_occupation("nurse"));
  EXPECT_TRUE(r.profile_first.confirmed.empty());
  EXPECT_TRUE(r.has(Flag::EmptyProfileFirst));
  EXPECT_TRUE(r.has(Flag::EmptyProfileSecond));
  EXPECT_FALSE(r.has(Flag::NormalizationSkip));
  ASSERT_EQ(q1_texts.size(), 2u);
  for (const auto& t : q1_texts) EXPECT_EQ(t.find(" has "), std::string::npos) << t;
}

TEST(Protocol, ProfileKeepsOnlyConfirmedAttributes) {
  Harness h(scripted([](const PromptInstance& p) -> std::string {
    if (p.step == Step::Background) {
      return p.attribute->category == taxonomy::Category::Skill ? "True" : "False";
    }
    return "Unknown";
  }));
  ProtocolRunner runner(*h.service, h.renderer);
  const auto occ = synthetic_occupation("nurse");
  const auto r = runner.run_protocol(fm_pair(), occ);
  ASSERT_EQ(r.profile_first.confirmed.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.profile_first.confirmed[i].name, occ.attributes[i].name);
}

TEST(Protocol, EachQ1SeesOnlyItsOwnProfile) {
  std::vector<PromptInstance> q1s;
  std::mutex m;
  Harness h(scripted([&](const PromptInstance& p) -> std::string {
    if (p.step == Step::Background) {
      // Shirley confirms skills only, Andrew abilities only.
      const bool skill = p.attribute->category == taxonomy::Category::Skill;
      const bool ability = p.attribute->category == taxonomy::Category::Ability;
      return (p.subject->given_name == "Shirley" ? skill : ability) ? "True" : "False";
    }
    if (p.step == Step::Q1) {
      std::lock_guard lock(m);
      q1s.push_back(p);
    }
    return "Yes";
  }));
  ProtocolRunner runner(*h.service, h.renderer);
  runner.run_protocol(fm_pair(), synthetic_occupation("nurse"));
  ASSERT_EQ(q1s.size(), 2u);
  for (const auto& p : q1s) {
    const auto& other = p.subject->given_name == "Shirley" ? "Andrew" : "Shirley";
    EXPECT_EQ(p.text.find(std::string(other) + " has"), std::string::npos) << p.text;
    EXPECT_NE(p.text.find(p.subject->given_name + " has"), std::string::npos) << p.text;
  }
}

TEST(Protocol, StereotypedFavorsListedGender) {
  auto spec = builtin("stereotyped");
  spec.bias_table = {{"accountant", dataset::Gender::Female}};
  Harness h(backend::make_persona(spec, "s"));
  ProtocolRunner runner(*h.service, h.renderer);
  const auto r = runner.run_protocol(fm_pair(), synthetic_occupation("accountant"));
  EXPECT_EQ(r.r_binary_first, "Yes");
  EXPECT_EQ(r.r_binary_second, "Yes");
  EXPECT_EQ(r.r_single, "Shirley");
  EXPECT_EQ(r.r_multi, "Shirley");
}

TEST(Protocol, UnparseableAnswerSetsSkipFlag) {
  Harness h(scripted([](const PromptInstance& p) -> std::string {
    if (p.step == Step::Background) return p.attribute->name == "Skill 1" ? "Possibly" : "True";
    if (p.step == Step::Q3) return "Both seem qualified and neither stands out";
    if (p.step == Step::Q2) return "Shirley";
    return "Yes";
  }));
  ProtocolRunner runner(*h.service, h.renderer);
  std::vector<RunRecord> records;
  const auto r = runner.run_protocol(fm_pair(), synthetic_occupation("nurse"), &records);
  EXPECT_EQ(r.background_skips, 2u);
  EXPECT_EQ(r.profile_first.confirmed.size(), 14u);
  EXPECT_FALSE(r.r_multi);
  EXPECT_TRUE(r.has(Flag::NormalizationSkip));
  std::size_t unparsed = 0;
  for (const auto& rec : records) unparsed += rec.canonical ? 0 : 1;
  EXPECT_EQ(unparsed, 3u);
}

std::vector<dataset::SubjectPair> pairs(std::size_t n) {
  std::vector<dataset::SubjectPair> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(fm_pair("F" + std::to_string(i), "M" + std::to_string(i)));
  return out;
}

std::vector<taxonomy::Occupation> occupations(std::size_t n) {
  std::vector<taxonomy::Occupation> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(synthetic_occupation("occupation " + std::to_string(i), 2));
  return out;
}

std::string results_text(const SuiteOutcome& o) {
  std::string s;
  for (const auto& r : o.results) s += result_line(r, o.summary.backend_id) + "\n";
  return s;
}

TEST(Suite, ParallelismDoesNotChangeResults) {
  auto spec = builtin("random");
  std::string reference;
  for (std::size_t workers : {1u, 8u}) {
    Harness h(backend::make_persona(spec, "random"));
    SuiteOptions o;
    o.parallelism = workers;
    const auto out = run_suite(*h.service, h.renderer, pairs(5), occupations(6), o);
    EXPECT_EQ(out.results.size(), 30u);
    EXPECT_EQ(out.summary.cells_completed, 30u);
    EXPECT_EQ(out.records.size(), 30u * (2 * 6 + 4));
    const auto text = results_text(out);
    if (reference.empty()) {
      reference = text;
    } else {
      EXPECT_EQ(text, reference);
    }
  }
}

TEST(Suite, FailedCellsAreDroppedAndCounted) {
  Harness h(scripted([](const PromptInstance& p) -> std::string {
              if (p.occupation_title == "occupation 1" && p.pair.first().given_name == "F2") {
                throw backend::TransportError("HTTP 503");
              }
              return p.step == Step::Background ? "True" : "Unknown";
            }),
            1);
  SuiteOptions o;
  o.parallelism = 3;
  o.failure_threshold = 0.01;
  const auto out = run_suite(*h.service, h.renderer, pairs(5), occupations(4), o);
  EXPECT_EQ(out.summary.cells_total, 20u);
  EXPECT_EQ(out.summary.cells_failed, 1u);
  EXPECT_EQ(out.summary.cells_completed, 19u);
  EXPECT_EQ(out.results.size(), 19u);
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_EQ(out.failures[0].occupation_title, "occupation 1");
  EXPECT_DOUBLE_EQ(out.summary.failure_ratio, 0.05);
  EXPECT_TRUE(out.summary.failed);

  Harness again(scripted([](const PromptInstance&) -> std::string { throw backend::TransportError("down"); }), 1);
  o.failure_threshold = 1.0;
  const auto all = run_suite(*again.service, again.renderer, pairs(1), occupations(1), o);
  EXPECT_FALSE(all.summary.failed);
  EXPECT_EQ(all.summary.cells_failed, 1u);
}

TEST(Suite, CancelStopsNewCells) {
  std::atomic<bool> cancel{false};
  std::atomic<int> q3s{0};
  Harness h(scripted([&](const PromptInstance& p) -> std::string {
    if (p.step == Step::Q3 && ++q3s == 3) cancel = true;
    return p.step == Step::Background ? "True" : "Unknown";
  }));
  SuiteOptions o;
  o.parallelism = 1;
  o.cancel = &cancel;
  const auto out = run_suite(*h.service, h.renderer, pairs(5), occupations(2), o);
  EXPECT_EQ(out.summary.cells_completed, 3u);
  EXPECT_EQ(out.summary.cells_not_run, 7u);
  EXPECT_TRUE(out.summary.interrupted);
}

TEST(Suite, SecondRunIsServedFromCache) {
  Harness h(backend::make_persona(builtin("neutral"), "neutral"));
  const auto first = run_suite(*h.service, h.renderer, pairs(2), occupations(2));
  const auto second = run_suite(*h.service, h.renderer, pairs(2), occupations(2));
  EXPECT_GT(first.summary.backend_calls, 0u);
  EXPECT_EQ(second.summary.backend_calls, 0u);
  EXPECT_EQ(second.summary.cache_hits, second.records.size());
  EXPECT_EQ(results_text(first), results_text(second));
}

TEST(Persistence, ResultLineRoundTrip) {
  Harness h(scripted([](const PromptInstance& p) -> std::string {
    if (p.step == Step::Background) return p.attribute->category == taxonomy::Category::Knowledge ? "True" : "False";
    if (p.step == Step::Q2) return "garbled";
    return "No";
  }));
  ProtocolRunner runner(*h.service, h.renderer);
  const auto pair = dataset::SubjectPair::make(male("O'Neil \"Jr\""), male("Bob+Ray"));
  const auto r = runner.run_protocol(pair, synthetic_occupation("nurse"));
  const auto line = result_line(r, "external:scripted:1");
  const auto back = parse_result_line(line);
  EXPECT_EQ(back.backend, "external:scripted:1");
  EXPECT_EQ(result_line(back.result, back.backend), line);
  EXPECT_EQ(back.result.pair, pair);
  EXPECT_FALSE(back.result.r_single);
  EXPECT_TRUE(back.result.has(Flag::NormalizationSkip));
  EXPECT_EQ(back.result.profile_first.confirmed.size(), 5u);

  TempDir dir;
  write_results(dir / "sub/results.jsonl", {r, r}, "b");
  const auto read = read_results(dir / "sub/results.jsonl");
  ASSERT_EQ(read.size(), 2u);
  EXPECT_EQ(result_line(read[1].result, "b"), result_line(r, "b"));
  EXPECT_THROW(parse_result_line("{not json"), FormatError);
}

}  // namespace
}  // namespace gsv::orchestrator
