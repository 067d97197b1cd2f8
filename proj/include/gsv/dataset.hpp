#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsv/taxonomy.hpp"

namespace gsv::dataset {

enum class Gender { Female, Male };

std::string_view gender_name(Gender g);
Gender parse_gender(std::string_view s);
inline Gender opposite(Gender g) { return g == Gender::Female ? Gender::Male : Gender::Female; }

struct Subject {
  std::string given_name;
  Gender gender = Gender::Female;
  bool operator==(const Subject&) const = default;
};

/// Two distinct subjects. Different-gender pairs are stored female first,
/// which is also the profile order used in the comparative questions.
class SubjectPair {
 public:
  /// Throws ValidationError for empty or identical names.
  static SubjectPair make(Subject a, Subject b);

  const Subject& first() const { return first_; }
  const Subject& second() const { return second_; }
  bool same_gender() const { return first_.gender == second_.gender; }
  /// Member with the given name, or nullptr.
  const Subject* find(std::string_view given_name) const;
  bool contains(const Subject& s) const { return s == first_ || s == second_; }
  /// "<first>+<second>" with separator characters escaped.
  std::string id() const;

  bool operator==(const SubjectPair&) const = default;

 private:
  SubjectPair(Subject first, Subject second) : first_(std::move(first)), second_(std::move(second)) {}
  Subject first_;
  Subject second_;
};

/// Ordered, nonempty set of canonical labels, unique ignoring case.
class AnswerSpace {
 public:
  explicit AnswerSpace(std::vector<std::string> labels);
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool contains(std::string_view label) const;
  /// "Choose only from A, B, or C."
  std::string suffix() const;
  bool operator==(const AnswerSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

enum class Step { Background, Q1, Q2, Q3 };
std::string_view step_name(Step s);
Step parse_step(std::string_view s);

struct PromptInstance {
  std::string id;
  Step step = Step::Background;
  std::string occupation_title;
  SubjectPair pair = SubjectPair::make({"a", Gender::Female}, {"b", Gender::Male});
  std::optional<Subject> subject;               // Background and Q1
  std::optional<taxonomy::Attribute> attribute; // Background only
  std::string text;
  AnswerSpace answer_space{{"Unknown"}};
  /// Set when a profile rendered empty.
  bool flagged = false;
};

struct BackgroundProfile {
  Subject subject;
  std::string occupation_title;
  std::vector<taxonomy::Attribute> confirmed;  // occupation order
};

/// Identity of a prompt: injective over (step, occupation, pair, subject, attribute).
std::string prompt_id(Step step, std::string_view occupation_title, const SubjectPair& pair,
                      const Subject* subject = nullptr, const taxonomy::Attribute* attribute = nullptr);

/// Word prefixes that override the vowel-letter rule.
struct ArticleRules {
  std::vector<std::string> a_prefixes;   // vowel letter, consonant sound: "uni", "eu", "one"
  std::vector<std::string> an_prefixes;  // consonant letter, vowel sound: "hour", "honest"
  static ArticleRules defaults();
};

std::string indefinite_article(std::string_view word, const ArticleRules& rules = ArticleRules::defaults());

enum class BackgroundLabels { TrueFalse, YesNo };

struct TemplateOptions {
  BackgroundLabels background_labels = BackgroundLabels::TrueFalse;
  ArticleRules articles = ArticleRules::defaults();
};

/// Renders the four prompt families. Stateless apart from its options.
class PromptRenderer {
 public:
  explicit PromptRenderer(TemplateOptions options = {});

  AnswerSpace background_space() const;
  /// The label counted as "attribute confirmed": True (or Yes).
  const std::string& affirmative_background_label() const;
  static AnswerSpace q1_space();
  static AnswerSpace q2_space(const SubjectPair& pair);
  static AnswerSpace q3_space(const SubjectPair& pair);

  static std::string base_context(const SubjectPair& pair);
  /// "<Name> has a skill, b knowledge, and c ability." or "" for an empty profile.
  static std::string profile_sentence(const BackgroundProfile& profile);

  PromptInstance background(const SubjectPair& pair, const Subject& subject, std::string_view occupation_title,
                            const taxonomy::Attribute& attribute) const;
  PromptInstance q1(const SubjectPair& pair, const Subject& subject, std::string_view occupation_title,
                    const BackgroundProfile& profile) const;
  /// Profile sentences follow argument order; different-gender pairs require (female, male).
  PromptInstance q2(const SubjectPair& pair, std::string_view occupation_title, const BackgroundProfile& profile_a,
                    const BackgroundProfile& profile_b) const;
  PromptInstance q3(const SubjectPair& pair, std::string_view occupation_title, const BackgroundProfile& profile_a,
                    const BackgroundProfile& profile_b) const;

  /// Q1..Q3 text with "{profile:<name>}" where the profile sentence goes.
  std::string q1_template(const SubjectPair& pair, const Subject& subject, std::string_view occupation_title) const;
  std::string q2_template(const SubjectPair& pair, std::string_view occupation_title) const;
  std::string q3_template(const SubjectPair& pair, std::string_view occupation_title) const;

  const TemplateOptions& options() const { return options_; }

 private:
  std::string q2_question(std::string_view occupation_title) const;
  std::string q3_question(std::string_view occupation_title) const;
  PromptInstance comparative(Step step, const SubjectPair& pair, std::string_view occupation_title,
                             const BackgroundProfile& a, const BackgroundProfile& b) const;

  TemplateOptions options_;
  AnswerSpace background_space_;
};

// --- pairs --------------------------------------------------------------------

enum class Pairing { Zip, Cross };

struct PairingOptions {
  Pairing different_gender = Pairing::Zip;
  /// Adds same-gender pairs (0,1), (2,3), ... within each name list.
  bool same_gender = false;
};

std::vector<SubjectPair> make_pairs(const std::vector<std::string>& female_names,
                                    const std::vector<std::string>& male_names, const PairingOptions& options = {});

// --- manifest -----------------------------------------------------------------

struct ManifestEntry {
  PromptInstance prompt;
  /// False for Q1..Q3 placeholders, whose text is a template until Step 1 runs.
  bool finalized = true;
};

struct Manifest {
  std::vector<ManifestEntry> entries;  // sorted by id
  std::size_t pair_count = 0;
  std::size_t occupation_count = 0;
  std::size_t attribute_total = 0;  // sum of |attributes| over occupations

  std::size_t size() const { return entries.size(); }
};

/// Instances per cell: 2 per attribute plus Q1 x2, Q2, Q3.
std::size_t expected_instance_count(std::size_t pair_count, const std::vector<taxonomy::Occupation>& occupations);

/// Throws ValidationError on duplicate occupation titles, duplicate pairs, or an
/// occupation with more than 15 attributes.
Manifest build_dataset(const std::vector<SubjectPair>& pairs, const std::vector<taxonomy::Occupation>& occupations,
                       const PromptRenderer& renderer = PromptRenderer{});

std::string manifest_line(const ManifestEntry& entry);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
/// Number of entries in a manifest file; IoError if it cannot be read.
std::size_t count_manifest_entries(const std::filesystem::path& path);

}  // namespace gsv::dataset
