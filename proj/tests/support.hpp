#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gsv/dataset.hpp"
#include "gsv/orchestrator.hpp"
#include "gsv/taxonomy.hpp"

namespace gsv::testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(GSV_FIXTURE_DIR) / rel; }

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("gsv-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline dataset::Subject female(const std::string& n) { return {n, dataset::Gender::Female}; }
inline dataset::Subject male(const std::string& n) { return {n, dataset::Gender::Male}; }

inline taxonomy::Attribute attr(const std::string& name, taxonomy::Category c, const std::string& desc = "") {
  return {name, c, desc.empty() ? "Description of " + name + "." : desc, 1.0};
}

/// Occupation with `per_category` synthetic attributes in each category.
inline taxonomy::Occupation synthetic_occupation(const std::string& title, std::size_t per_category = 5) {
  taxonomy::Occupation o;
  o.soc_code = "00-0000.00";
  o.title = title;
  for (auto c : taxonomy::kCategories) {
    for (std::size_t i = 0; i < per_category; ++i) {
      o.attributes.push_back(attr(std::string(taxonomy::category_name(c)) + " " + std::to_string(i + 1), c));
    }
  }
  return o;
}

/// Hand-built cell result; answers are canonical labels or nullopt for a skip.
inline orchestrator::ProtocolResult cell(const dataset::SubjectPair& pair, const std::string& occupation,
                                         std::optional<std::string> q1_first, std::optional<std::string> q1_second,
                                         std::optional<std::string> q2, std::optional<std::string> q3) {
  orchestrator::ProtocolResult r;
  r.pair = pair;
  r.occupation_title = occupation;
  r.profile_first.subject = pair.first();
  r.profile_second.subject = pair.second();
  r.r_binary_first = std::move(q1_first);
  r.r_binary_second = std::move(q1_second);
  r.r_single = std::move(q2);
  r.r_multi = std::move(q3);
  if (!r.r_binary_first || !r.r_binary_second || !r.r_single || !r.r_multi) {
    r.flags.insert(orchestrator::Flag::NormalizationSkip);
  }
  return r;
}

inline dataset::SubjectPair fm_pair(const std::string& f = "Shirley", const std::string& m = "Andrew") {
  return dataset::SubjectPair::make(female(f), male(m));
}

// --- hand-rolled generators ---------------------------------------------------------

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

inline std::string random_name(Rng& rng) {
  static const char* kSyll[] = {"an", "be", "ca", "do", "el", "fi", "ga", "ho", "ir", "jo", "ka", "lu", "mo", "ni"};
  std::string s;
  const auto n = 2 + uniform(rng, 3);
  for (std::size_t i = 0; i < n; ++i) s += kSyll[uniform(rng, std::size(kSyll))];
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline dataset::SubjectPair random_pair(Rng& rng, bool same_gender = false) {
  auto a = random_name(rng);
  auto b = random_name(rng);
  while (b == a || b == "Both" || b == "Neither" || b == "Unknown") b = random_name(rng);
  if (same_gender) {
    const auto g = uniform(rng, 2) == 0 ? dataset::Gender::Female : dataset::Gender::Male;
    return dataset::SubjectPair::make({a, g}, {b, g});
  }
  return dataset::SubjectPair::make(female(a), male(b));
}

/// Cell with uniformly random labels from each answer space; `skip_rate` of the
/// answers are left unparsed.
inline orchestrator::ProtocolResult random_cell(Rng& rng, const dataset::SubjectPair& pair, const std::string& occ,
                                                double skip_rate = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](const std::vector<std::string>& labels) -> std::optional<std::string> {
    if (u(rng) < skip_rate) return std::nullopt;
    return labels[uniform(rng, labels.size())];
  };
  const std::vector<std::string> q1{"Yes", "No", "Unknown"};
  const std::vector<std::string> q2{pair.first().given_name, pair.second().given_name, "Unknown"};
  const std::vector<std::string> q3{pair.first().given_name, pair.second().given_name, "Both", "Neither", "Unknown"};
  return cell(pair, occ, pick(q1), pick(q1), pick(q2), pick(q3));
}

}  // namespace gsv::testing
