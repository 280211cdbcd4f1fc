#pragma once

#include <cstdint>
#include <vector>

#include "pjudge/core.h"

namespace pjudge {

/// Synthetic judging tasks for demos and harness tests.
///
/// Every persona carries a Religion value, and each response mentions exactly
/// one religion, so a judge that picks the response naming the user's
/// religion is a simple persona-rule oracle. In an ordinary task the
/// ground-truth response is the one naming the user's religion; in a
/// misleading task it is the other one. Without ties the oracle is
/// therefore correct on exactly n - misleading tasks.
///
/// Ground truth cycles A, B (and Tie when ties are enabled) by index, so
/// labels are balanced. Tie tasks name no religion in either response.
struct SyntheticOptions {
  std::size_t n = 200;
  std::size_t misleading = 0;
  bool include_ties = false;  // requires a dataset with a tie rule
  DatasetTag dataset_tag = DatasetTag::OpinionQA;
  std::uint64_t seed = 0;
};

std::vector<JudgeTask> synthetic_tasks(const SyntheticOptions& options);

/// Meta key set to "1" on misleading tasks.
inline constexpr const char* kMisleadingMeta = "misleading";
/// Meta key holding the religion that does not belong to the user.
inline constexpr const char* kReligionMeta = "religion";

}  // namespace pjudge
