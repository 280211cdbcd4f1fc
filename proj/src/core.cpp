#include "pjudge/core.h"

#include <algorithm>
#include <cctype>

#include "pjudge/persona.h"

namespace pjudge {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view to_string(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::PRISM: return "PRISM";
    case DatasetTag::OpinionQA: return "OpinionQA";
    case DatasetTag::EC: return "EC";
    case DatasetTag::PR: return "PR";
  }
  return "?";
}

std::string_view to_string(Choice choice) {
  switch (choice) {
    case Choice::A: return "A";
    case Choice::B: return "B";
    case Choice::Tie: return "Tie";
  }
  return "?";
}

std::string_view to_string(JudgeMode mode) {
  switch (mode) {
    case JudgeMode::NoTiePlain: return "NoTiePlain";
    case JudgeMode::NoTieCertainty: return "NoTieCertainty";
    case JudgeMode::WithTie: return "WithTie";
  }
  return "?";
}

std::string_view to_string(CertaintyBand band) {
  switch (band) {
    case CertaintyBand::Uncertain: return "Uncertain";
    case CertaintyBand::ModeratelyConfident: return "Moderately Confident";
    case CertaintyBand::QuiteConfident: return "Quite Confident";
    case CertaintyBand::Confident: return "Confident";
    case CertaintyBand::HighlyConfident: return "Highly Confident";
  }
  return "?";
}

DatasetTag parse_dataset_tag(std::string_view text) {
  for (auto tag : {DatasetTag::PRISM, DatasetTag::OpinionQA, DatasetTag::EC, DatasetTag::PR}) {
    if (iequals(text, to_string(tag))) return tag;
  }
  throw UsageError("unknown dataset tag: " + std::string(text));
}

Choice parse_choice(std::string_view text) {
  for (auto c : {Choice::A, Choice::B, Choice::Tie}) {
    if (iequals(text, to_string(c))) return c;
  }
  throw DataError("unknown choice: " + std::string(text));
}

JudgeMode parse_mode(std::string_view text) {
  for (auto m : {JudgeMode::NoTiePlain, JudgeMode::NoTieCertainty, JudgeMode::WithTie}) {
    if (iequals(text, to_string(m))) return m;
  }
  if (iequals(text, "no-tie-plain")) return JudgeMode::NoTiePlain;
  if (iequals(text, "no-tie-certainty")) return JudgeMode::NoTieCertainty;
  if (iequals(text, "with-tie")) return JudgeMode::WithTie;
  throw UsageError("unknown judge mode: " + std::string(text));
}

bool dataset_has_tie_rule(DatasetTag tag) {
  return tag == DatasetTag::PRISM || tag == DatasetTag::EC;
}

bool mode_requests_certainty(JudgeMode mode) { return mode == JudgeMode::NoTieCertainty; }
bool mode_allows_tie(JudgeMode mode) { return mode == JudgeMode::WithTie; }

const std::string* Persona::find(std::string_view name) const {
  for (const auto& attr : attributes) {
    if (attr.name == name) return &attr.value;
  }
  return nullptr;
}

CertaintyBand band_of(int certainty) {
  if (certainty < kMinCertainty || certainty > kMaxCertainty) {
    throw std::out_of_range("certainty out of range [1,100]: " + std::to_string(certainty));
  }
  if (certainty <= 20) return CertaintyBand::Uncertain;
  if (certainty <= 40) return CertaintyBand::ModeratelyConfident;
  if (certainty <= 60) return CertaintyBand::QuiteConfident;
  if (certainty <= 80) return CertaintyBand::Confident;
  return CertaintyBand::HighlyConfident;
}

std::pair<int, int> band_range(CertaintyBand band) {
  const int index = static_cast<int>(band);
  return {index * 20 + 1, index * 20 + 20};
}

void validate_task(const JudgeTask& task) {
  if (task.id.empty()) throw DataError("task id is empty");
  if (task.response_a.empty() || task.response_b.empty()) {
    throw DataError("task " + task.id + ": empty response");
  }
  if (task.response_a == task.response_b) {
    throw DataError("task " + task.id + ": identical responses");
  }
  if (task.persona.dataset_tag != task.dataset_tag) {
    throw DataError("task " + task.id + ": persona schema does not match dataset");
  }
  if (task.ground_truth == Choice::Tie && !dataset_has_tie_rule(task.dataset_tag)) {
    throw DataError("task " + task.id + ": Tie ground truth not permitted for " +
                    std::string(to_string(task.dataset_tag)));
  }
  validate_persona(task.persona);
}

}  // namespace pjudge
