#include "gsv/taxonomy.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsv/errors.hpp"
#include "gsv/text.hpp"

namespace gsv::taxonomy {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view category_name(Category c) {
  switch (c) {
    case Category::Skill: return "Skill";
    case Category::Knowledge: return "Knowledge";
    case Category::Ability: return "Ability";
  }
  return "Skill";
}

std::string_view category_word(Category c) {
  switch (c) {
    case Category::Skill: return "skill";
    case Category::Knowledge: return "knowledge";
    case Category::Ability: return "ability";
  }
  return "skill";
}

Category parse_category(std::string_view s) {
  const auto v = text::to_lower(text::trim(s));
  if (v == "skill" || v == "skills") return Category::Skill;
  if (v == "knowledge") return Category::Knowledge;
  if (v == "ability" || v == "abilities") return Category::Ability;
  throw ValidationError("unknown attribute category: " + std::string(s));
}

void Attribute::validate() const {
  if (text::trim(name).empty()) throw ValidationError("attribute name is empty");
  if (text::trim(description).empty()) {
    throw ValidationError("attribute '" + name + "' has an empty description");
  }
}

std::size_t Occupation::count(Category c) const {
  return static_cast<std::size_t>(std::count_if(attributes.begin(), attributes.end(),
                                                [c](const Attribute& a) { return a.category == c; }));
}

bool Occupation::complete() const {
  return std::all_of(std::begin(kCategories), std::end(kCategories),
                     [this](Category c) { return count(c) == 5; });
}

// --- TaxonomyDB -------------------------------------------------------------

TaxonomyDB::Entry& TaxonomyDB::entry(const std::string& soc_code) { return entries_[soc_code]; }

const TaxonomyDB::Entry* TaxonomyDB::find(std::string_view soc_code) const {
  auto it = entries_.find(soc_code);
  return it == entries_.end() ? nullptr : &it->second;
}

void TaxonomyDB::add_row(RawRow row) {
  auto& rows = entry(row.soc_code).rows[row.category];
  for (const auto& existing : rows) {
    if (existing.element == row.element) {
      throw ValidationError("duplicate " + std::string(category_word(row.category)) + " row for " +
                            row.soc_code + " / " + row.element);
    }
  }
  rows.push_back(std::move(row));
}

void TaxonomyDB::set_title(const std::string& soc_code, std::string_view title) {
  entry(soc_code).title = text::normalize_title(title);
}

void TaxonomyDB::add_alternate_title(const std::string& soc_code, std::string_view title) {
  auto& alts = entry(soc_code).alternate_titles;
  auto normalized = text::normalize_title(title);
  if (std::find(alts.begin(), alts.end(), normalized) == alts.end()) alts.push_back(std::move(normalized));
}

bool TaxonomyDB::contains(std::string_view soc_code) const { return find(soc_code) != nullptr; }

std::vector<std::string> TaxonomyDB::codes() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [code, _] : entries_) out.push_back(code);
  return out;
}

std::size_t TaxonomyDB::row_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) {
    for (const auto& [__, rows] : e.rows) n += rows.size();
  }
  return n;
}

const std::vector<RawRow>& TaxonomyDB::rows(std::string_view soc_code, Category c) const {
  static const std::vector<RawRow> kEmpty;
  const auto* e = find(soc_code);
  if (e == nullptr) return kEmpty;
  auto it = e->rows.find(c);
  return it == e->rows.end() ? kEmpty : it->second;
}

std::optional<std::string> TaxonomyDB::title(std::string_view soc_code) const {
  const auto* e = find(soc_code);
  return e == nullptr ? std::nullopt : e->title;
}

const std::vector<std::string>& TaxonomyDB::alternate_titles(std::string_view soc_code) const {
  static const std::vector<std::string> kEmpty;
  const auto* e = find(soc_code);
  return e == nullptr ? kEmpty : e->alternate_titles;
}

// --- TSV ingestion ------------------------------------------------------------

namespace {

struct TsvTable {
  std::string file;
  std::vector<std::string> header;           // normalized
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)
};

std::string normalize_header(std::string_view h) {
  auto v = text::normalize_title(h);
  std::replace(v.begin(), v.end(), '_', ' ');
  return v;
}

TsvTable read_tsv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string());
  TsvTable table;
  table.file = path.string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, '\t');
    if (table.header.empty()) {
      for (const auto& f : fields) table.header.push_back(normalize_header(f));
      continue;
    }
    if (fields.size() < table.header.size()) {
      throw FormatError(table.file, line_no,
                        "expected " + std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    }
    table.rows.emplace_back(line_no, std::move(fields));
  }
  return table;
}

/// Index of the first header matching any alias; FormatError naming `canonical` otherwise.
std::size_t require_column(const TsvTable& t, std::string_view canonical,
                           std::initializer_list<std::string_view> aliases) {
  for (auto alias : aliases) {
    auto it = std::find(t.header.begin(), t.header.end(), alias);
    if (it != t.header.end()) return static_cast<std::size_t>(it - t.header.begin());
  }
  throw FormatError(t.file, 1, "missing required column '" + std::string(canonical) + "'");
}

std::optional<std::size_t> optional_column(const TsvTable& t, std::initializer_list<std::string_view> aliases) {
  for (auto alias : aliases) {
    auto it = std::find(t.header.begin(), t.header.end(), alias);
    if (it != t.header.end()) return static_cast<std::size_t>(it - t.header.begin());
  }
  return std::nullopt;
}

double parse_value(const TsvTable& t, std::size_t line_no, std::string_view raw) {
  const auto s = text::trim(raw);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw FormatError(t.file, line_no, "non-numeric data value '" + std::string(raw) + "'");
  }
  return v;
}

void ingest(TaxonomyDB& db, const fs::path& path, Category category, const ParseOptions& options) {
  const auto t = read_tsv(path);
  if (t.header.empty()) return;  // empty file: nothing to ingest
  const auto code_col = require_column(t, "code", {"code", "o*net-soc code", "soc code"});
  const auto name_col = require_column(t, "element name", {"element name"});
  const auto scale_col = require_column(t, "scale id", {"scale id"});
  const auto value_col = require_column(t, "data value", {"data value"});
  const auto desc_col = require_column(t, "description", {"description", "element description"});
  const auto title_col = optional_column(t, {"title", "occupation title"});

  for (const auto& [line_no, fields] : t.rows) {
    const auto scale = std::string(text::trim(fields[scale_col]));
    if (scale != options.ranking_scale) continue;
    RawRow row;
    row.soc_code = std::string(text::trim(fields[code_col]));
    row.category = category;
    row.element = std::string(text::trim(fields[name_col]));
    row.scale_id = scale;
    row.value = parse_value(t, line_no, fields[value_col]);
    row.description = std::string(text::trim(fields[desc_col]));
    if (row.soc_code.empty()) throw FormatError(t.file, line_no, "empty code");
    if (row.element.empty()) throw FormatError(t.file, line_no, "empty element name");
    if (row.description.empty()) throw FormatError(t.file, line_no, "empty description");
    if (title_col && !text::trim(fields[*title_col]).empty()) {
      db.set_title(row.soc_code, fields[*title_col]);
    }
    try {
      db.add_row(std::move(row));
    } catch (const ValidationError& e) {
      throw FormatError(t.file, line_no, e.what());
    }
  }
}

}  // namespace

TaxonomyDB parse_attribute_tables(const fs::path& skill_path, const fs::path& knowledge_path,
                                  const fs::path& ability_path, const ParseOptions& options) {
  TaxonomyDB db;
  ingest(db, skill_path, Category::Skill, options);
  ingest(db, knowledge_path, Category::Knowledge, options);
  ingest(db, ability_path, Category::Ability, options);
  return db;
}

void load_alternate_titles(TaxonomyDB& db, const fs::path& path) {
  const auto t = read_tsv(path);
  if (t.header.empty()) return;
  const auto code_col = require_column(t, "code", {"code", "o*net-soc code", "soc code"});
  const auto alt_col = require_column(t, "alternate title", {"alternate title"});
  for (const auto& [line_no, fields] : t.rows) {
    const auto code = std::string(text::trim(fields[code_col]));
    if (code.empty()) throw FormatError(t.file, line_no, "empty code");
    if (!text::trim(fields[alt_col]).empty()) db.add_alternate_title(code, fields[alt_col]);
  }
}

// --- selection and matching --------------------------------------------------

std::vector<Attribute> select_top_attributes(const TaxonomyDB& db, std::string_view soc_code, std::size_t k) {
  if (!db.contains(soc_code)) throw NotFoundError("unknown occupation code: " + std::string(soc_code));
  std::vector<Attribute> out;
  for (auto category : kCategories) {
    std::vector<const RawRow*> rows;
    for (const auto& r : db.rows(soc_code, category)) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](const RawRow* a, const RawRow* b) {
      if (a->value != b->value) return a->value > b->value;
      return a->element < b->element;
    });
    const auto take = std::min(k, rows.size());
    for (std::size_t i = 0; i < take; ++i) {
      out.push_back(Attribute{rows[i]->element, category, rows[i]->description, rows[i]->value});
    }
  }
  return out;
}

MatchReport match_occupations(const std::vector<std::string>& candidate_titles, const TaxonomyDB& db) {
  std::map<std::string, std::string> primary;    // normalized title -> smallest code
  std::map<std::string, std::string> alternate;
  for (const auto& code : db.codes()) {  // sorted, so first insert is the smallest code
    if (auto t = db.title(code)) primary.emplace(*t, code);
    for (const auto& alt : db.alternate_titles(code)) alternate.emplace(alt, code);
  }

  std::set<std::string> seen;
  MatchReport report;
  for (const auto& candidate : candidate_titles) {
    auto title = text::normalize_title(candidate);
    if (title.empty() || !seen.insert(title).second) continue;
    if (auto it = primary.find(title); it != primary.end()) {
      report.matched.push_back({title, it->second});
    } else if (auto alt = alternate.find(title); alt != alternate.end()) {
      report.matched.push_back({title, alt->second});
    } else {
      report.unmatched.push_back(candidate);
    }
  }
  std::sort(report.matched.begin(), report.matched.end(),
            [](const TitleMatch& a, const TitleMatch& b) { return a.title < b.title; });
  std::sort(report.unmatched.begin(), report.unmatched.end());
  return report;
}

Occupation resolve_occupation(const TaxonomyDB& db, const TitleMatch& match, std::size_t k) {
  return Occupation{match.soc_code, text::normalize_title(match.title),
                    select_top_attributes(db, match.soc_code, k)};
}

// --- snapshot -----------------------------------------------------------------

std::string snapshot_line(const Occupation& occupation) {
  ojson j;
  j["soc_code"] = occupation.soc_code;
  j["title"] = occupation.title;
  j["complete"] = occupation.complete();
  auto attrs = ojson::array();
  for (const auto& a : occupation.attributes) {
    ojson aj;
    aj["name"] = a.name;
    aj["category"] = category_name(a.category);
    aj["description"] = a.description;
    aj["importance"] = a.importance;
    attrs.push_back(std::move(aj));
  }
  j["attributes"] = std::move(attrs);
  return j.dump();
}

Occupation parse_snapshot_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    Occupation o;
    o.soc_code = j.at("soc_code").get<std::string>();
    o.title = j.at("title").get<std::string>();
    for (const auto& aj : j.at("attributes")) {
      Attribute a;
      a.name = aj.at("name").get<std::string>();
      a.category = parse_category(aj.at("category").get<std::string>());
      a.description = aj.at("description").get<std::string>();
      a.importance = aj.at("importance").get<double>();
      o.attributes.push_back(std::move(a));
    }
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("snapshot", 0, e.what());
  }
}

void write_snapshot(const fs::path& path, const std::vector<Occupation>& occupations) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot write file");
  for (const auto& o : occupations) out << snapshot_line(o) << '\n';
}

std::vector<Occupation> read_snapshot(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string());
  std::vector<Occupation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse_snapshot_line(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string(), line_no, e.what());
    }
  }
  return out;
}

}  // namespace gsv::taxonomy
