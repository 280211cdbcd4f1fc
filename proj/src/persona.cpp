#include "pjudge/persona.h"

#include <algorithm>
#include <array>
#include <set>

namespace pjudge {

namespace {

constexpr std::array<std::string_view, 8> kPrSchema = {
    "Age", "Sex", "Living Country", "Birth Country", "Education", "Occupation", "Income",
    "Marital Status"};

constexpr std::array<std::string_view, 9> kPrismSchema = {
    "Age",       "Sex",       "Race",           "Birth Country", "Living Country",
    "Employment Status", "Education", "Marital Status", "Religion"};

constexpr std::array<std::string_view, 11> kOpinionQaSchema = {
    "Age",      "Sex",   "Living Country", "Education", "Citizenship", "Marital Status",
    "Religion", "Party", "Ideology",       "Income",    "Race"};

constexpr std::array<std::string_view, 6> kEcSchema = {
    "Age", "Sex", "Race", "Education", "Income", "Big Five Personality Traits"};

// Concept -> column mapping for the ablation presets.
constexpr std::array<std::string_view, 3> kImportantThree = {"Education", "Living Country",
                                                             "Race"};
constexpr std::array<std::string_view, 1> kLeastOne = {"Religion"};

std::ptrdiff_t schema_index(DatasetTag tag, std::string_view name) {
  const auto schema = schema_for(tag);
  const auto it = std::find(schema.begin(), schema.end(), name);
  return it == schema.end() ? -1 : std::distance(schema.begin(), it);
}

template <std::size_t N>
std::vector<std::string> intersect_schema(DatasetTag tag,
                                          const std::array<std::string_view, N>& wanted) {
  std::vector<std::string> names;
  for (auto name : schema_for(tag)) {
    if (std::find(wanted.begin(), wanted.end(), name) != wanted.end()) names.emplace_back(name);
  }
  return names;
}

}  // namespace

std::span<const std::string_view> schema_for(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::PR: return kPrSchema;
    case DatasetTag::PRISM: return kPrismSchema;
    case DatasetTag::OpinionQA: return kOpinionQaSchema;
    case DatasetTag::EC: return kEcSchema;
  }
  return {};
}

Persona make_persona(DatasetTag tag, std::vector<Attribute> attributes) {
  std::erase_if(attributes, [](const Attribute& a) { return a.value.empty(); });
  std::set<std::string> seen;
  for (const auto& attr : attributes) {
    if (schema_index(tag, attr.name) < 0) {
      throw DataError("attribute '" + attr.name + "' is not in the " +
                      std::string(to_string(tag)) + " persona schema");
    }
    if (!seen.insert(attr.name).second) {
      throw DataError("duplicate persona attribute '" + attr.name + "'");
    }
  }
  std::stable_sort(attributes.begin(), attributes.end(),
                   [tag](const Attribute& x, const Attribute& y) {
                     return schema_index(tag, x.name) < schema_index(tag, y.name);
                   });
  Persona persona{tag, std::move(attributes)};
  validate_persona(persona);
  return persona;
}

void validate_persona(const Persona& persona) {
  std::ptrdiff_t previous = -1;
  for (const auto& attr : persona.attributes) {
    const auto index = schema_index(persona.dataset_tag, attr.name);
    if (index < 0) {
      throw DataError("attribute '" + attr.name + "' is not in the " +
                      std::string(to_string(persona.dataset_tag)) + " persona schema");
    }
    if (index == previous) throw DataError("duplicate persona attribute '" + attr.name + "'");
    if (index < previous) throw DataError("persona attributes out of schema order");
    if (attr.value.empty()) throw DataError("empty value for attribute '" + attr.name + "'");
    if (attr.value.find_first_of("\r\n") != std::string::npos) {
      throw DataError("multi-line value for attribute '" + attr.name + "'");
    }
    previous = index;
  }
}

std::string selection_label(const FeatureSelection& selection) {
  switch (selection.kind) {
    case SelectionKind::All: return "All";
    case SelectionKind::ImportantThree: return "ImportantThree";
    case SelectionKind::LeastOne: return "LeastOne";
    case SelectionKind::NoPersona: return "NoPersona";
    case SelectionKind::Custom: {
      std::string label = "Custom(";
      for (std::size_t i = 0; i < selection.custom.size(); ++i) {
        if (i) label += '|';
        label += selection.custom[i];
      }
      return label + ")";
    }
  }
  return "?";
}

FeatureSelection parse_selection(std::string_view text) {
  if (text == "All" || text == "all") return FeatureSelection::all();
  if (text == "ImportantThree" || text == "important-three") {
    return FeatureSelection::important_three();
  }
  if (text == "LeastOne" || text == "least-one") return FeatureSelection::least_one();
  if (text == "NoPersona" || text == "none" || text == "no-persona") {
    return FeatureSelection::no_persona();
  }
  constexpr std::string_view kCustomPrefix = "custom:";
  if (text.starts_with(kCustomPrefix)) {
    std::vector<std::string> names;
    std::string_view rest = text.substr(kCustomPrefix.size());
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      auto name = rest.substr(0, comma);
      if (!name.empty()) names.emplace_back(name);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (names.empty()) throw UsageError("custom feature selection needs at least one name");
    return FeatureSelection::custom_names(std::move(names));
  }
  // Label form, as written to config files: Custom(A|B).
  if (text.starts_with("Custom(") && text.ends_with(")")) {
    std::vector<std::string> names;
    std::string_view rest = text.substr(7, text.size() - 8);
    while (!rest.empty()) {
      const auto bar = rest.find('|');
      auto name = rest.substr(0, bar);
      if (!name.empty()) names.emplace_back(name);
      if (bar == std::string_view::npos) break;
      rest.remove_prefix(bar + 1);
    }
    if (names.empty()) throw UsageError("custom feature selection needs at least one name");
    return FeatureSelection::custom_names(std::move(names));
  }
  throw UsageError("unknown feature selection: " + std::string(text));
}

std::vector<std::string> resolve_selection(DatasetTag tag, const FeatureSelection& selection) {
  std::vector<std::string> names;
  switch (selection.kind) {
    case SelectionKind::All:
      for (auto n : schema_for(tag)) names.emplace_back(n);
      return names;
    case SelectionKind::NoPersona:
      return names;
    case SelectionKind::ImportantThree:
      names = intersect_schema(tag, kImportantThree);
      break;
    case SelectionKind::LeastOne:
      names = intersect_schema(tag, kLeastOne);
      break;
    case SelectionKind::Custom:
      for (const auto& name : selection.custom) {
        if (schema_index(tag, name) < 0) {
          throw DataError("feature '" + name + "' is not in the " + std::string(to_string(tag)) +
                          " persona schema");
        }
      }
      return selection.custom;
  }
  if (names.empty()) {
    throw DataError("selection " + selection_label(selection) + " has no variable in the " +
                    std::string(to_string(tag)) + " persona schema");
  }
  return names;
}

Persona select_features(const Persona& persona, const FeatureSelection& selection) {
  const auto keep = resolve_selection(persona.dataset_tag, selection);
  Persona out{persona.dataset_tag, {}};
  for (const auto& attr : persona.attributes) {
    if (std::find(keep.begin(), keep.end(), attr.name) != keep.end()) {
      out.attributes.push_back(attr);
    }
  }
  return out;
}

std::vector<std::string> persona_lines(const Persona& persona) {
  std::vector<std::string> lines;
  if (persona.attributes.empty()) {
    lines.emplace_back(kEmptyProfileLine);
    return lines;
  }
  lines.reserve(persona.attributes.size());
  for (const auto& attr : persona.attributes) lines.push_back(attr.name + ": " + attr.value);
  return lines;
}

std::string render_persona(const Persona& persona) {
  std::string out;
  for (const auto& line : persona_lines(persona)) {
    if (!out.empty()) out += '\n';
    out += line;
  }
  return out;
}

}  // namespace pjudge
