#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "gsv/backend.hpp"
#include "gsv/digest.hpp"
#include "gsv/text.hpp"

namespace gsv::backend {

using dataset::Step;
using dataset::Subject;

std::string_view persona_kind_name(PersonaKind k) {
  switch (k) {
    case PersonaKind::Stereotyped: return "stereotyped";
    case PersonaKind::Neutral: return "neutral";
    case PersonaKind::Contrarian: return "contrarian";
    case PersonaKind::Random: return "random";
  }
  return "neutral";
}

PersonaKind parse_persona_kind(std::string_view s) {
  const auto v = text::to_lower(text::trim(s));
  if (v == "stereotyped") return PersonaKind::Stereotyped;
  if (v == "neutral") return PersonaKind::Neutral;
  if (v == "contrarian") return PersonaKind::Contrarian;
  if (v == "random") return PersonaKind::Random;
  throw ValidationError("unknown persona kind: " + std::string(s));
}

void PersonaSpec::validate() const {
  if (kind == PersonaKind::Random) {
    if (!qualify_prob || !seed) throw ValidationError("random persona needs qualify_prob and seed");
    if (!(*qualify_prob >= 0.0 && *qualify_prob <= 1.0)) {
      throw ValidationError("qualify_prob must lie in [0, 1]");
    }
  }
  if (kind == PersonaKind::Stereotyped && bias_table.empty()) {
    throw ValidationError("stereotyped persona needs a bias_table");
  }
}

PersonaSpec persona_spec_from_json(const nlohmann::json& j) {
  try {
    PersonaSpec spec;
    spec.kind = parse_persona_kind(j.at("kind").get<std::string>());
    if (j.contains("bias_table")) {
      for (const auto& [title, gender] : j.at("bias_table").items()) {
        spec.bias_table[text::normalize_title(title)] = dataset::parse_gender(gender.get<std::string>());
      }
    }
    if (j.contains("qualify_prob")) spec.qualify_prob = j.at("qualify_prob").get<double>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("persona spec: ") + e.what());
  }
}

nlohmann::json persona_spec_to_json(const PersonaSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = persona_kind_name(spec.kind);
  if (!spec.bias_table.empty()) {
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (const auto& [title, gender] : spec.bias_table) table[title] = dataset::gender_name(gender);
    j["bias_table"] = std::move(table);
  }
  if (spec.qualify_prob) j["qualify_prob"] = *spec.qualify_prob;
  if (spec.seed) j["seed"] = *spec.seed;
  return nlohmann::json::parse(j.dump());
}

namespace {

class PersonaBackend : public Backend {
 public:
  PersonaBackend(PersonaSpec spec, BackendId id) : spec_(std::move(spec)), id_(std::move(id)) {}

  const BackendId& id() const override { return id_; }

  std::string complete(const PromptInstance& prompt) override {
    const auto& labels = prompt.answer_space.labels();
    switch (spec_.kind) {
      case PersonaKind::Stereotyped: return stereotyped(prompt);
      case PersonaKind::Neutral:
        switch (prompt.step) {
          case Step::Background: return labels.front();
          case Step::Q1: return "Yes";
          case Step::Q2: return "Unknown";
          case Step::Q3: return "Both";
        }
        break;
      case PersonaKind::Contrarian:
        switch (prompt.step) {
          case Step::Background: return labels.front();
          case Step::Q1: return "No";
          case Step::Q2:
          case Step::Q3: return prompt.pair.first().given_name;
        }
        break;
      case PersonaKind::Random: return random(prompt);
    }
    return labels.back();
  }

 private:
  std::string stereotyped(const PromptInstance& prompt) const {
    switch (prompt.step) {
      case Step::Background: return prompt.answer_space.labels().front();
      case Step::Q1: return "Yes";
      default: break;
    }
    const auto fallback = prompt.step == Step::Q2 ? "Unknown" : "Neither";
    auto it = spec_.bias_table.find(text::normalize_title(prompt.occupation_title));
    if (it == spec_.bias_table.end()) return fallback;
    for (const Subject* s : {&prompt.pair.first(), &prompt.pair.second()}) {
      if (s->gender == it->second) return s->given_name;
    }
    return fallback;
  }

  /// Uniform in [0, 1), a pure function of (seed, prompt id). Only Q1..Q3 draw, and
  /// their texts are unique per id, so this agrees with the text-keyed cache.
  double draw(const PromptInstance& prompt) const {
    const auto seed_text = std::to_string(*spec_.seed);
    std::mt19937_64 gen(sha256_fields_u64({"gsv-persona-draw/1", seed_text, prompt.id}));
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
  }

  std::string random(const PromptInstance& prompt) const {
    const auto& labels = prompt.answer_space.labels();
    switch (prompt.step) {
      case Step::Background: return labels.front();
      case Step::Q1: return draw(prompt) < *spec_.qualify_prob ? "Yes" : "No";
      default: {
        auto index = static_cast<std::size_t>(draw(prompt) * static_cast<double>(labels.size()));
        return labels[std::min(index, labels.size() - 1)];
      }
    }
  }

  PersonaSpec spec_;
  BackendId id_;
};

}  // namespace

std::unique_ptr<Backend> make_persona(const PersonaSpec& spec, std::string name, std::string version) {
  spec.validate();
  auto normalized = spec;
  normalized.bias_table.clear();
  for (const auto& [title, gender] : spec.bias_table) normalized.bias_table[text::normalize_title(title)] = gender;
  return std::make_unique<PersonaBackend>(std::move(normalized),
                                          BackendId{BackendKind::Persona, std::move(name), std::move(version)});
}

std::vector<std::pair<std::string, PersonaSpec>> builtin_personas() {
  PersonaSpec stereotyped;
  stereotyped.kind = PersonaKind::Stereotyped;
  for (const auto* t : {"nurse", "secretary", "dancer", "housekeeper", "receptionist"}) {
    stereotyped.bias_table[t] = Gender::Female;
  }
  for (const auto* t : {"accountant", "mechanic", "pilot", "plumber", "engineer", "surgeon", "politician"}) {
    stereotyped.bias_table[t] = Gender::Male;
  }

  PersonaSpec neutral;
  neutral.kind = PersonaKind::Neutral;

  PersonaSpec contrarian;
  contrarian.kind = PersonaKind::Contrarian;

  PersonaSpec random;
  random.kind = PersonaKind::Random;
  random.qualify_prob = 0.8;
  random.seed = 20240101;

  return {{"stereotyped", stereotyped}, {"neutral", neutral}, {"contrarian", contrarian}, {"random", random}};
}

}  // namespace gsv::backend
