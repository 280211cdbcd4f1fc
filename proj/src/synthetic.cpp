#include "pjudge/synthetic.h"

#include <array>
#include <cstdio>
#include <string_view>

#include "pjudge/persona.h"
#include "pjudge/random.h"

namespace pjudge {

namespace {

// No entry is a substring of another, so a mention is unambiguous.
constexpr std::array<std::string_view, 8> kReligions = {
    "Buddhist", "Catholic", "Hindu", "Jewish", "Muslim", "Protestant", "Atheist", "Sikh"};
constexpr std::array<std::string_view, 5> kAges = {"18-24", "25-34", "35-44", "45-54", "55-64"};
constexpr std::array<std::string_view, 2> kSexes = {"Female", "Male"};
constexpr std::array<std::string_view, 5> kCountries = {"United States", "Canada", "Mexico",
                                                        "Kenya", "Japan"};
constexpr std::array<std::string_view, 4> kEducation = {"High school", "Some college",
                                                        "College graduate", "Postgraduate"};
constexpr std::array<std::string_view, 3> kMarital = {"Married", "Never married", "Divorced"};
constexpr std::array<std::string_view, 4> kRaces = {"White", "Black", "Asian", "Hispanic"};

template <std::size_t N>
std::string pick(Rng& rng, const std::array<std::string_view, N>& values) {
  return std::string(values[rng.below(N)]);
}

std::string stance(std::string_view religion, std::size_t index, int variant) {
  return "Speaking from a " + std::string(religion) + " perspective, option " +
         std::to_string(variant) + " is the better fit for question " + std::to_string(index) +
         ".";
}

}  // namespace

std::vector<JudgeTask> synthetic_tasks(const SyntheticOptions& options) {
  if (options.misleading > options.n) throw UsageError("more misleading tasks than tasks");
  if (options.include_ties && !dataset_has_tie_rule(options.dataset_tag)) {
    throw UsageError("dataset " + std::string(to_string(options.dataset_tag)) +
                     " has no tie labels");
  }
  const std::size_t cycle = options.include_ties ? 3 : 2;

  // Spread misleading tasks evenly over the index range.
  std::vector<bool> misleading(options.n, false);
  for (std::size_t k = 0; k < options.misleading; ++k) {
    misleading[k * options.n / options.misleading] = true;
  }

  std::vector<JudgeTask> tasks;
  tasks.reserve(options.n);
  for (std::size_t i = 0; i < options.n; ++i) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
    const auto own = rng.below(kReligions.size());
    const auto rival = (own + 1 + rng.below(kReligions.size() - 1)) % kReligions.size();

    JudgeTask task;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    task.id = id;
    task.dataset_tag = options.dataset_tag;
    task.question = "Which option would you choose in scenario " + std::to_string(i) + "?";
    task.persona = make_persona(options.dataset_tag,
                                {{"Age", pick(rng, kAges)},
                                 {"Sex", pick(rng, kSexes)},
                                 {"Living Country", pick(rng, kCountries)},
                                 {"Education", pick(rng, kEducation)},
                                 {"Marital Status", pick(rng, kMarital)},
                                 {"Religion", std::string(kReligions[own])},
                                 {"Race", pick(rng, kRaces)}});

    task.ground_truth = static_cast<Choice>(i % cycle);
    if (task.ground_truth == Choice::Tie) {
      task.response_a = "Either option works for question " + std::to_string(i) + " (first).";
      task.response_b = "Either option works for question " + std::to_string(i) + " (second).";
    } else {
      const auto matching = stance(kReligions[own], i, 1);
      const auto other = stance(kReligions[rival], i, 2);
      const bool gt_matches = !misleading[i];
      const auto& truth_text = gt_matches ? matching : other;
      const auto& rival_text = gt_matches ? other : matching;
      task.response_a = task.ground_truth == Choice::A ? truth_text : rival_text;
      task.response_b = task.ground_truth == Choice::A ? rival_text : truth_text;
    }
    if (misleading[i]) task.meta[kMisleadingMeta] = "1";
    task.meta[kReligionMeta] = std::string(kReligions[rival]);
    validate_task(task);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

}  // namespace pjudge
