#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gsv::taxonomy {

enum class Category { Skill, Knowledge, Ability };

inline constexpr Category kCategories[] = {Category::Skill, Category::Knowledge, Category::Ability};

/// "Skill" / "Knowledge" / "Ability".
std::string_view category_name(Category c);
/// Lowercase singular used inside prompts: "skill" / "knowledge" / "ability".
std::string_view category_word(Category c);
/// Accepts the name in any case, or the plural "skills"/"abilities".
Category parse_category(std::string_view s);

struct Attribute {
  std::string name;
  Category category = Category::Skill;
  std::string description;
  double importance = 0.0;  // ranking scale units; only used for ordering

  /// Throws ValidationError on an empty name or description.
  void validate() const;
  bool operator==(const Attribute&) const = default;
};

struct Occupation {
  std::string soc_code;
  std::string title;  // lowercase
  std::vector<Attribute> attributes;

  std::size_t count(Category c) const;
  /// Five attributes in each category.
  bool complete() const;
  bool operator==(const Occupation&) const = default;
};

/// One retained table row: a (code, element) rating on the ranking scale.
struct RawRow {
  std::string soc_code;
  Category category = Category::Skill;
  std::string element;
  std::string scale_id;
  double value = 0.0;
  std::string description;
};

/// Ingested taxonomy. Read-only after construction; iteration is sorted by code.
class TaxonomyDB {
 public:
  /// Throws ValidationError if (code, category, element) was already added.
  void add_row(RawRow row);
  void set_title(const std::string& soc_code, std::string_view title);
  void add_alternate_title(const std::string& soc_code, std::string_view title);

  bool contains(std::string_view soc_code) const;
  std::vector<std::string> codes() const;
  std::size_t occupation_count() const { return entries_.size(); }
  std::size_t row_count() const;

  /// Rows for a code and category in insertion order; empty for codes or
  /// categories without data.
  const std::vector<RawRow>& rows(std::string_view soc_code, Category c) const;
  std::optional<std::string> title(std::string_view soc_code) const;
  const std::vector<std::string>& alternate_titles(std::string_view soc_code) const;

 private:
  struct Entry {
    std::optional<std::string> title;
    std::vector<std::string> alternate_titles;
    std::map<Category, std::vector<RawRow>> rows;
  };
  Entry& entry(const std::string& soc_code);
  const Entry* find(std::string_view soc_code) const;

  std::map<std::string, Entry, std::less<>> entries_;
};

struct ParseOptions {
  /// Rows with any other scale id are dropped. "IM" is the importance scale.
  std::string ranking_scale = "IM";
};

/// Reads the three tab-separated attribute tables. Each needs a header row with
/// the columns code, element name, scale id, data value and description; an
/// optional title column names the occupation.
TaxonomyDB parse_attribute_tables(const std::filesystem::path& skill_path,
                                  const std::filesystem::path& knowledge_path,
                                  const std::filesystem::path& ability_path,
                                  const ParseOptions& options = {});

/// Reads a tab-separated alternate-title table (columns: code, alternate title).
void load_alternate_titles(TaxonomyDB& db, const std::filesystem::path& path);

/// Per category, the k highest-rated attributes (ties by name), Skills first,
/// then Knowledge, then Abilities. Throws NotFoundError for an unknown code.
std::vector<Attribute> select_top_attributes(const TaxonomyDB& db, std::string_view soc_code,
                                             std::size_t k = 5);

struct TitleMatch {
  std::string title;  // normalized candidate title
  std::string soc_code;
  bool operator==(const TitleMatch&) const = default;
};

struct MatchReport {
  std::vector<TitleMatch> matched;     // sorted by title
  std::vector<std::string> unmatched;  // sorted, as given
};

/// Case-insensitive, whitespace-normalized exact matching against each code's
/// title and alternate titles. A primary-title hit wins over an alternate one;
/// remaining ties go to the smallest code.
MatchReport match_occupations(const std::vector<std::string>& candidate_titles, const TaxonomyDB& db);

Occupation resolve_occupation(const TaxonomyDB& db, const TitleMatch& match, std::size_t k = 5);

/// One occupation per line, fixed field order.
std::string snapshot_line(const Occupation& occupation);
Occupation parse_snapshot_line(std::string_view line);
void write_snapshot(const std::filesystem::path& path, const std::vector<Occupation>& occupations);
std::vector<Occupation> read_snapshot(const std::filesystem::path& path);

}  // namespace gsv::taxonomy
