#include "gsv/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsv/errors.hpp"
#include "gsv/text.hpp"

namespace gsv::report {

std::string file_component(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                      c == '_' || c == '-';
    out += keep ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::string artifact_name(std::string_view backend, Setting setting, std::string_view artifact, std::string_view ext) {
  std::string out = file_component(backend);
  out += "__";
  out += metrics::setting_name(setting);
  out += "__";
  out += artifact;
  out += '.';
  out += ext;
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

std::string align_columns(const std::vector<std::vector<std::string>>& table) {
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : table) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line.append(widths[i] - row[i].size() + 2, ' ');
    }
    out += line;
    out += '\n';
  }
  return out;
}

// --- scatter ----------------------------------------------------------------

std::string scatter_csv(const std::vector<MetricRow>& rows) {
  std::vector<const MetricRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const MetricRow* a, const MetricRow* b) { return a->occupation < b->occupation; });
  std::string out = "occupation,conf,cons\n";
  for (const auto* r : sorted) {
    out += text::csv_field(r->occupation) + ',' + text::format_ratio(r->conf) + ',' + text::format_ratio(r->cons) +
           '\n';
  }
  return out;
}

std::string scatter_spec(std::string_view csv_name, std::string_view title) {
  auto axis = [](std::string_view field, std::string_view label) {
    return nlohmann::ordered_json{{"field", field},
                                  {"type", "quantitative"},
                                  {"title", label},
                                  {"scale", {{"domain", {0, 1}}}}};
  };
  nlohmann::ordered_json spec;
  spec["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
  spec["title"] = title;
  spec["data"] = {{"url", csv_name}, {"format", {{"type", "csv"}}}};
  spec["mark"] = {{"type", "point"}, {"tooltip", true}};
  spec["encoding"] = {{"x", axis("conf", "Confirmation")},
                      {"y", axis("cons", "Consistency")},
                      {"tooltip", {{{"field", "occupation"}, {"type", "nominal"}}}}};
  return spec.dump(2) + '\n';
}

std::vector<std::filesystem::path> emit_scatter_data(const std::vector<MetricRow>& rows,
                                                     const std::filesystem::path& out_dir,
                                                     const std::vector<ScatterKey>& expected) {
  std::map<ScatterKey, std::vector<MetricRow>> parts;
  for (const auto& key : expected) parts[key];
  for (const auto& r : rows) parts[{r.backend, r.setting}].push_back(r);

  std::vector<std::filesystem::path> written;
  for (const auto& [key, part] : parts) {
    const auto csv_name = artifact_name(key.backend, key.setting, "scatter", "csv");
    const auto spec_name = artifact_name(key.backend, key.setting, "scatter", "vl.json");
    write_file(out_dir / csv_name, scatter_csv(part));
    write_file(out_dir / spec_name,
               scatter_spec(csv_name, key.backend + " (" + std::string(metrics::setting_name(key.setting)) + ")"));
    written.push_back(out_dir / csv_name);
    written.push_back(out_dir / spec_name);
  }
  return written;
}

// --- bias tables ----------------------------------------------------------------

std::vector<BiasEntry> bias_entries(const std::vector<MetricRow>& rows, std::string_view backend) {
  std::vector<BiasEntry> out;
  for (const auto& r : rows) {
    if (r.backend == backend && r.setting == Setting::DifferentGender && r.bias_diff) {
      out.push_back({r.occupation, *r.bias_diff});
    }
  }
  return out;
}

std::string bias_table_csv(const std::vector<BiasEntry>& table) {
  std::string out = "occupation,bias_diff\n";
  for (const auto& e : table) out += text::csv_field(e.occupation) + ',' + text::format_ratio(e.bias_diff) + '\n';
  return out;
}

std::string bias_table_text(const std::vector<BiasEntry>& table, double threshold) {
  std::string out(kBiasSignLine);
  out += "\nthreshold: |bias_diff| > " + text::format_ratio(threshold) + "\n\n";
  std::vector<std::vector<std::string>> cells{{"occupation", "bias_diff"}};
  for (const auto& e : table) cells.push_back({e.occupation, text::format_ratio(e.bias_diff)});
  out += align_columns(cells);
  if (table.empty()) out += "(no rows)\n";
  return out;
}

std::vector<std::filesystem::path> emit_bias_tables(const std::vector<MetricRow>& rows,
                                                    const std::map<std::string, double>& thresholds,
                                                    const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& [backend, threshold] : thresholds) {
    const auto table = metrics::threshold_table(bias_entries(rows, backend), threshold);
    const auto csv = out_dir / artifact_name(backend, Setting::DifferentGender, "bias_table", "csv");
    const auto txt = out_dir / artifact_name(backend, Setting::DifferentGender, "bias_table", "txt");
    write_file(csv, bias_table_csv(table));
    write_file(txt, bias_table_text(table, threshold));
    written.push_back(csv);
    written.push_back(txt);
  }
  return written;
}

// --- answer ratios ----------------------------------------------------------------

namespace {

const std::vector<std::string> kRatioColumns{"Q2-Both", "Q2-Neither", "Q2-Unknown",
                                             "Q3-Both", "Q3-Neither", "Q3-Unknown"};

std::vector<std::string> ratio_cells(const AnswerRatios& a) {
  return {text::format_ratio(a.q2_both),    text::format_ratio(a.q2_neither), text::format_ratio(a.q2_unknown),
          text::format_ratio(a.q3_both),    text::format_ratio(a.q3_neither), text::format_ratio(a.q3_unknown)};
}

}  // namespace

std::string answer_ratio_csv(const std::map<std::string, AnswerRatios>& ratios) {
  std::string out = "backend," + text::join(kRatioColumns, ",") + '\n';
  for (const auto& [backend, a] : ratios) out += text::csv_field(backend) + ',' + text::join(ratio_cells(a), ",") + '\n';
  return out;
}

std::string answer_ratio_text(const std::map<std::string, AnswerRatios>& ratios) {
  std::vector<std::vector<std::string>> cells;
  auto header = kRatioColumns;
  header.insert(header.begin(), "backend");
  cells.push_back(header);
  for (const auto& [backend, a] : ratios) {
    auto row = ratio_cells(a);
    row.insert(row.begin(), backend);
    cells.push_back(std::move(row));
  }
  std::string out = align_columns(cells);
  if (ratios.empty()) out += "(no rows)\n";
  for (const auto& [backend, a] : ratios) {
    if (a.q2_skipped + a.q3_skipped == 0) continue;
    out += backend + ": excluded unparsed answers Q2=" + std::to_string(a.q2_skipped) +
           " Q3=" + std::to_string(a.q3_skipped) + '\n';
  }
  return out;
}

std::vector<std::filesystem::path> emit_answer_ratio_table(const std::map<std::string, AnswerRatios>& ratios,
                                                           const std::filesystem::path& out_dir) {
  const auto csv = out_dir / "answer_ratios.csv";
  const auto txt = out_dir / "answer_ratios.txt";
  write_file(csv, answer_ratio_csv(ratios));
  write_file(txt, answer_ratio_text(ratios));
  return {csv, txt};
}

}  // namespace gsv::report
