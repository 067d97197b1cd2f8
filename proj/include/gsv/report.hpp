#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gsv/metrics.hpp"

namespace gsv::report {

using metrics::AnswerRatios;
using metrics::BiasEntry;
using metrics::MetricRow;
using metrics::Setting;

/// Replaces everything outside [A-Za-z0-9._-] with '_' so backend ids are safe in file names.
std::string file_component(std::string_view s);

/// `<backend>__<setting>__<artifact>.<ext>`
std::string artifact_name(std::string_view backend, Setting setting, std::string_view artifact, std::string_view ext);

inline constexpr std::string_view kBiasSignLine =
    "bias_diff > 0 favors female subjects; bias_diff < 0 favors male subjects";

/// Columns occupation,conf,cons sorted by occupation. Rows must share backend and setting.
std::string scatter_csv(const std::vector<MetricRow>& rows);
/// Vega-Lite spec plotting `csv_name` with both axes fixed to [0, 1].
std::string scatter_spec(std::string_view csv_name, std::string_view title);

struct ScatterKey {
  std::string backend;
  Setting setting = Setting::DifferentGender;
  auto operator<=>(const ScatterKey&) const = default;
};

/// One CSV plus one plot stub per (backend, setting) found in `rows` or listed in
/// `expected`; partitions with no rows get a header-only CSV. Returns written paths.
std::vector<std::filesystem::path> emit_scatter_data(const std::vector<MetricRow>& rows,
                                                     const std::filesystem::path& out_dir,
                                                     const std::vector<ScatterKey>& expected = {});

/// Different-gender rows of one backend as (occupation, bias_diff) entries.
std::vector<BiasEntry> bias_entries(const std::vector<MetricRow>& rows, std::string_view backend);

std::string bias_table_csv(const std::vector<BiasEntry>& table);
std::string bias_table_text(const std::vector<BiasEntry>& table, double threshold);

/// Per backend in `thresholds`: filtered table as CSV and aligned text. Returns written paths.
std::vector<std::filesystem::path> emit_bias_tables(const std::vector<MetricRow>& rows,
                                                    const std::map<std::string, double>& thresholds,
                                                    const std::filesystem::path& out_dir);

std::string answer_ratio_csv(const std::map<std::string, AnswerRatios>& ratios);
std::string answer_ratio_text(const std::map<std::string, AnswerRatios>& ratios);

/// answer_ratios.csv and answer_ratios.txt, one row per backend. Returns written paths.
std::vector<std::filesystem::path> emit_answer_ratio_table(const std::map<std::string, AnswerRatios>& ratios,
                                                           const std::filesystem::path& out_dir);

/// Left-aligned columns separated by two spaces, no trailing blanks.
std::string align_columns(const std::vector<std::vector<std::string>>& table);

/// Writes `content` byte-for-byte (binary mode, so LF stays LF).
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace gsv::report
