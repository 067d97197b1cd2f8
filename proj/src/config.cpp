#include "gsv/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsv/digest.hpp"
#include "gsv/errors.hpp"
#include "gsv/text.hpp"

namespace gsv::config {

using nlohmann::json;

const BackendConfig* RunConfig::find_backend(std::string_view name) const {
  for (const auto& b : backends) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

double RunConfig::threshold_for(std::string_view backend_name) const {
  const auto it = thresholds.find(std::string(backend_name));
  return it == thresholds.end() ? default_threshold : it->second;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.is_object() && j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<std::string> string_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string() || text::trim(v.get<std::string>()).empty()) {
      throw ValidationError(where + " must hold nonempty strings");
    }
    out.emplace_back(text::trim(v.get<std::string>()));
  }
  return out;
}

BackendConfig parse_backend(const json& j, std::uint64_t seed) {
  BackendConfig b;
  b.name = require(j, "name", "backend").get<std::string>();
  if (b.name.empty() || b.name.find(':') != std::string::npos) {
    throw ValidationError("backend name must be nonempty and contain no ':'");
  }
  const std::string where = "backend " + b.name;
  const auto type = require(j, "type", where).get<std::string>();
  b.version = get_or<std::string>(j, "version", "1");

  if (type == "persona") {
    b.kind = backend::BackendKind::Persona;
    backend::PersonaSpec spec;
    if (j.contains("persona")) {
      const auto builtin = j.at("persona").get<std::string>();
      bool found = false;
      for (auto& [name, s] : backend::builtin_personas()) {
        if (name == builtin) {
          spec = s;
          found = true;
        }
      }
      if (!found) throw ValidationError(where + ": unknown built-in persona '" + builtin + "'");
    } else if (j.contains("spec")) {
      spec = backend::persona_spec_from_json(j.at("spec"));
    } else {
      throw ValidationError(where + ": persona backends need \"persona\" or \"spec\"");
    }
    if (spec.kind == backend::PersonaKind::Random && !spec.seed) spec.seed = seed;
    if (j.contains("qualify_prob")) spec.qualify_prob = j.at("qualify_prob").get<double>();
    spec.validate();
    b.persona = std::move(spec);
  } else if (type == "http_chat") {
    b.kind = backend::BackendKind::HttpChat;
    backend::HttpChatConfig http;
    http.endpoint = require(j, "endpoint", where).get<std::string>();
    http.model = require(j, "model", where).get<std::string>();
    http.api_key_env = get_or<std::string>(j, "api_key_env", "");
    if (j.contains("api_key")) throw ValidationError(where + ": put the key in an environment variable (api_key_env)");
    http.temperature = get_or(j, "temperature", 0.0);
    http.timeout = std::chrono::seconds(get_or(j, "timeout_seconds", 60));
    if (http.temperature < 0.0) throw ValidationError(where + ": temperature must be >= 0");
    b.http = std::move(http);
    if (!j.contains("version")) b.version = b.http->model;
  } else {
    throw ValidationError(where + ": unknown type '" + type + "'");
  }
  return b;
}

dataset::BackgroundLabels parse_labels(const std::string& s) {
  if (s == "true_false") return dataset::BackgroundLabels::TrueFalse;
  if (s == "yes_no") return dataset::BackgroundLabels::YesNo;
  throw ValidationError("background_labels must be true_false or yes_no");
}

dataset::Pairing parse_pairing(const std::string& s) {
  if (s == "zip") return dataset::Pairing::Zip;
  if (s == "cross") return dataset::Pairing::Cross;
  throw ValidationError("pairing.different_gender must be zip or cross");
}

void check_ratio(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(what + " must lie in [0, 1]");
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig c;
  try {
    c.seed = get_or<std::uint64_t>(j, "seed", 0);

    const auto& tax = require(j, "taxonomy", "config");
    c.taxonomy.skills = resolve(base_dir, require(tax, "skills", "taxonomy").get<std::string>());
    c.taxonomy.knowledge = resolve(base_dir, require(tax, "knowledge", "taxonomy").get<std::string>());
    c.taxonomy.abilities = resolve(base_dir, require(tax, "abilities", "taxonomy").get<std::string>());
    if (tax.contains("alternate_titles")) {
      c.taxonomy.alternate_titles = resolve(base_dir, tax.at("alternate_titles").get<std::string>());
    }
    c.taxonomy.ranking_scale = get_or<std::string>(tax, "ranking_scale", "IM");
    c.taxonomy.top_k = get_or<std::size_t>(tax, "top_k", 5);
    if (c.taxonomy.top_k == 0 || c.taxonomy.top_k > 5) throw ValidationError("taxonomy.top_k must be 1..5");

    const auto& names = require(j, "names", "config");
    c.female_names = string_list(require(names, "female", "names"), "names.female");
    c.male_names = string_list(require(names, "male", "names"), "names.male");

    if (j.contains("pairing")) {
      const auto& p = j.at("pairing");
      c.pairing.different_gender = parse_pairing(get_or<std::string>(p, "different_gender", "zip"));
      c.pairing.same_gender = get_or(p, "same_gender", false);
    }

    c.occupations = string_list(require(j, "occupations", "config"), "occupations");
    if (c.occupations.empty()) throw ValidationError("occupations must not be empty");

    if (j.contains("templates")) {
      const auto& t = j.at("templates");
      c.templates.background_labels = parse_labels(get_or<std::string>(t, "background_labels", "true_false"));
      if (t.contains("article_a_prefixes")) {
        for (auto& p : string_list(t.at("article_a_prefixes"), "templates.article_a_prefixes")) {
          c.templates.articles.a_prefixes.push_back(text::to_lower(p));
        }
      }
      if (t.contains("article_an_prefixes")) {
        for (auto& p : string_list(t.at("article_an_prefixes"), "templates.article_an_prefixes")) {
          c.templates.articles.an_prefixes.push_back(text::to_lower(p));
        }
      }
    }

    const auto& backends = require(j, "backends", "config");
    if (!backends.is_array() || backends.empty()) throw ValidationError("backends must be a nonempty list");
    std::set<std::string> seen;
    for (const auto& b : backends) {
      auto parsed = parse_backend(b, c.seed);
      if (!seen.insert(parsed.name).second) throw ValidationError("duplicate backend name '" + parsed.name + "'");
      c.backends.push_back(std::move(parsed));
    }

    if (j.contains("run")) {
      const auto& r = j.at("run");
      c.parallelism = get_or<std::size_t>(r, "parallelism", 1);
      if (r.contains("cache_path")) c.cache_path = resolve(base_dir, r.at("cache_path").get<std::string>());
      c.failure_threshold = get_or(r, "failure_threshold", 0.0);
      c.requests_per_second = get_or(r, "requests_per_second", 0.0);
      c.max_attempts = get_or(r, "max_attempts", 5);
    }
    if (c.parallelism == 0) throw ValidationError("run.parallelism must be >= 1");
    check_ratio(c.failure_threshold, "run.failure_threshold");
    if (c.requests_per_second < 0.0) throw ValidationError("run.requests_per_second must be >= 0");
    if (c.max_attempts < 1) throw ValidationError("run.max_attempts must be >= 1");

    if (j.contains("report")) {
      const auto& r = j.at("report");
      c.default_threshold = get_or(r, "threshold", 0.2);
      if (r.contains("thresholds")) {
        for (const auto& [name, v] : r.at("thresholds").items()) {
          if (c.find_backend(name) == nullptr) throw ValidationError("report.thresholds: unknown backend '" + name + "'");
          c.thresholds[name] = v.get<double>();
          check_ratio(c.thresholds[name], "report.thresholds." + name);
        }
      }
      c.metric_options.all_records_denominator = get_or(r, "all_records_denominator", false);
    }
    check_ratio(c.default_threshold, "report.threshold");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  // Validate pairs now so a bad name list fails before any stage runs.
  if (dataset::make_pairs(c.female_names, c.male_names, c.pairing).empty()) {
    throw ValidationError("names produce no subject pairs");
  }

  c.digest = sha256_hex(j.dump());
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace gsv::config
