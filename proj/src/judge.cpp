#include "pjudge/judge.h"

#include <optional>
#include <set>
#include <variant>

#include "pjudge/parallel.h"
#include "pjudge/prompt.h"
#include "pjudge/random.h"

namespace pjudge {

ExhaustedRetries::ExhaustedRetries(ParseError last_error, std::vector<std::string> completions)
    : std::runtime_error("no parseable verdict after " + std::to_string(completions.size()) +
                         " attempts; last error " + std::string(to_string(last_error.kind)) +
                         ": " + last_error.detail),
      last_error_(std::move(last_error)),
      completions_(std::move(completions)) {}

QueryResult query_with_retries(JudgeBackend& backend, const std::string& prompt, JudgeMode mode,
                               const GenerationParams& params, const QueryOptions& options) {
  if (options.max_retries < 0) throw UsageError("max_retries must be >= 0");
  std::vector<std::string> completions;
  ParseError last;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    std::optional<std::string> completion;
    std::optional<CacheKey> key;
    if (options.cache) {
      key = CacheKey::make(params, prompt, attempt);
      completion = options.cache->get(*key);
    }
    if (!completion) {
      completion = backend.complete(prompt, params);
      if (options.cache) options.cache->put(*key, *completion);
    }
    auto outcome = try_parse_verdict(*completion, mode, options.refusal);
    completions.push_back(std::move(*completion));
    if (auto* verdict = std::get_if<Verdict>(&outcome)) {
      return QueryResult{std::move(*verdict), attempt + 1};
    }
    last = std::get<ParseError>(std::move(outcome));
  }
  throw ExhaustedRetries(std::move(last), std::move(completions));
}

bool presentation_flipped(std::uint64_t seed, std::string_view task_id) {
  return (derive_seed(seed, task_id) & 1u) != 0;
}

EvalRecord judge(JudgeBackend& backend, const JudgeTask& task, JudgeMode mode,
                 const FeatureSelection& selection, std::uint64_t seed,
                 const GenerationParams& params, const QueryOptions& options) {
  const bool flipped = presentation_flipped(seed, task.id);
  const auto persona_text = render_persona(select_features(task.persona, selection));
  const auto& first = flipped ? task.response_b : task.response_a;
  const auto& second = flipped ? task.response_a : task.response_b;
  const auto prompt = build_prompt(task.question, first, second, mode, persona_text);

  auto result = query_with_retries(backend, prompt, mode, params, options);

  EvalRecord record;
  record.task_id = task.id;
  record.dataset_tag = task.dataset_tag;
  record.model_id = params.model_id;
  record.mode = mode;
  record.selection = selection_label(selection);
  record.flipped = flipped;
  record.verdict = std::move(result.verdict);
  record.verdict.choice = canonical_orientation(record.verdict.choice, flipped);
  record.ground_truth = task.ground_truth;
  record.correct = is_correct(record.verdict.choice, task.ground_truth);
  record.attempts = result.attempts;
  return record;
}

JudgeRun run_judging(JudgeBackend& backend, std::span<const JudgeTask> tasks,
                     const JudgeRunOptions& options) {
  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    validate_task(tasks[i]);
    if (!ids.insert(tasks[i].id).second) {
      throw DataError("duplicate task id '" + tasks[i].id + "'", i);
    }
    if (tasks[i].ground_truth == Choice::Tie && !mode_allows_tie(options.mode)) {
      throw DataError("task '" + tasks[i].id + "' is labelled Tie but mode " +
                          std::string(to_string(options.mode)) + " has no tie option",
                      i);
    }
  }
  // Resolve the selection once so a bad custom name fails before any call.
  if (!tasks.empty()) resolve_selection(tasks.front().dataset_tag, options.selection);

  std::vector<std::optional<EvalRecord>> records(tasks.size());
  std::vector<std::optional<UnresolvedTask>> unresolved(tasks.size());
  parallel_for(tasks.size(), options.jobs, [&](std::size_t i) {
    try {
      records[i] = judge(backend, tasks[i], options.mode, options.selection, options.seed,
                         options.params, options.query);
    } catch (const ExhaustedRetries& e) {
      unresolved[i] = UnresolvedTask{tasks[i].id, e.last_error(), e.completions()};
    }
  });

  JudgeRun run;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (records[i]) run.records.push_back(std::move(*records[i]));
    if (unresolved[i]) run.unresolved.push_back(std::move(*unresolved[i]));
  }
  return run;
}

}  // namespace pjudge
