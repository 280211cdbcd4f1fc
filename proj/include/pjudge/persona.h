#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pjudge/core.h"

namespace pjudge {

/// Attribute names accepted for a dataset, in rendering order.
///
/// PR, PRISM and EC follow the published persona-variable lists. OpinionQA has
/// the ten published variables followed by an optional "Race" column, which
/// the survey provides and the ethnicity ablation needs.
std::span<const std::string_view> schema_for(DatasetTag tag);

/// Builds a persona from (name, value) pairs: drops empty values, rejects
/// unknown or duplicate names, and reorders into schema order.
Persona make_persona(DatasetTag tag, std::vector<Attribute> attributes);

/// Throws DataError if the persona breaks an invariant (unknown or repeated
/// name, empty or multi-line value, out-of-schema ordering).
void validate_persona(const Persona& persona);

enum class SelectionKind { All, ImportantThree, LeastOne, NoPersona, Custom };

struct FeatureSelection {
  SelectionKind kind = SelectionKind::All;
  std::vector<std::string> custom;  // only for Custom

  static FeatureSelection all() { return {SelectionKind::All, {}}; }
  static FeatureSelection important_three() { return {SelectionKind::ImportantThree, {}}; }
  static FeatureSelection least_one() { return {SelectionKind::LeastOne, {}}; }
  static FeatureSelection no_persona() { return {SelectionKind::NoPersona, {}}; }
  static FeatureSelection custom_names(std::vector<std::string> names) {
    return {SelectionKind::Custom, std::move(names)};
  }

  friend bool operator==(const FeatureSelection&, const FeatureSelection&) = default;
};

/// Short label used in file names and tables: All, ImportantThree, LeastOne,
/// NoPersona, or Custom(a|b|c).
std::string selection_label(const FeatureSelection& selection);

/// Accepts the labels above plus the CLI spellings all, important-three,
/// least-one, none, and custom:Name1,Name2.
FeatureSelection parse_selection(std::string_view text);

/// Attribute names a selection keeps for a dataset. Throws DataError when a
/// custom name is absent from the schema or when a preset has no variable in
/// this dataset (e.g. LeastOne on EC, which has no Religion column).
std::vector<std::string> resolve_selection(DatasetTag tag, const FeatureSelection& selection);

/// Restricts a persona to the selected attributes, preserving order.
Persona select_features(const Persona& persona, const FeatureSelection& selection);

inline constexpr std::string_view kEmptyProfileLine = "No profile information available.";

/// "Name: Value" per line, no trailing newline. Empty personas render as
/// kEmptyProfileLine.
std::string render_persona(const Persona& persona);

/// The rendered lines individually (what the annotation UI shows).
std::vector<std::string> persona_lines(const Persona& persona);

}  // namespace pjudge
