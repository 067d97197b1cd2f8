#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gsv/backend.hpp"
#include "gsv/dataset.hpp"
#include "gsv/metrics.hpp"

namespace gsv::config {

struct TaxonomyPaths {
  std::filesystem::path skills;
  std::filesystem::path knowledge;
  std::filesystem::path abilities;
  std::optional<std::filesystem::path> alternate_titles;
  std::string ranking_scale = "IM";
  std::size_t top_k = 5;
};

struct BackendConfig {
  std::string name;
  backend::BackendKind kind = backend::BackendKind::Persona;
  std::string version = "1";
  std::optional<backend::PersonaSpec> persona;
  std::optional<backend::HttpChatConfig> http;

  backend::BackendId id() const { return {kind, name, version}; }
};

/// Everything a build/run/report cycle needs. Relative paths are resolved
/// against the config file's directory. Credentials are referenced by
/// environment variable name only.
struct RunConfig {
  TaxonomyPaths taxonomy;
  std::vector<std::string> female_names;
  std::vector<std::string> male_names;
  dataset::PairingOptions pairing;
  std::vector<std::string> occupations;
  dataset::TemplateOptions templates;
  std::vector<BackendConfig> backends;

  std::size_t parallelism = 1;
  std::optional<std::filesystem::path> cache_path;
  double failure_threshold = 0.0;
  double requests_per_second = 0.0;
  int max_attempts = 5;

  double default_threshold = 0.2;
  std::map<std::string, double> thresholds;  // backend name -> threshold
  metrics::MetricOptions metric_options;

  std::uint64_t seed = 0;
  /// Hex SHA-256 of the canonical JSON form of the input document.
  std::string digest;

  const BackendConfig* find_backend(std::string_view name) const;
  double threshold_for(std::string_view backend_name) const;
};

/// Throws ValidationError on any missing or out-of-range field.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Reads and parses a JSON config file. IoError / FormatError / ValidationError.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace gsv::config
