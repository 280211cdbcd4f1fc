#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pjudge/backend.h"
#include "pjudge/core.h"
#include "pjudge/persona.h"
#include "pjudge/refusal.h"
#include "pjudge/verdict.h"

namespace pjudge {

inline constexpr int kDefaultMaxRetries = kMaxAttempts - 1;

/// Every attempt failed to parse. Holds the last parse error and the raw
/// completions in attempt order.
class ExhaustedRetries : public std::runtime_error {
 public:
  ExhaustedRetries(ParseError last_error, std::vector<std::string> completions);

  const ParseError& last_error() const { return last_error_; }
  const std::vector<std::string>& completions() const { return completions_; }
  int attempts() const { return static_cast<int>(completions_.size()); }

 private:
  ParseError last_error_;
  std::vector<std::string> completions_;
};

struct QueryOptions {
  int max_retries = kDefaultMaxRetries;
  ResponseCache* cache = nullptr;
  const RefusalDetector* refusal = nullptr;
};

struct QueryResult {
  Verdict verdict;
  int attempts = 0;
};

/// Up to 1 + max_retries attempts. Attempt i (0-based) first looks up
/// CacheKey(params, prompt, i) and only calls the backend on a miss; every
/// completion fetched from the backend is written back. BackendError from the
/// backend propagates unchanged.
QueryResult query_with_retries(JudgeBackend& backend, const std::string& prompt, JudgeMode mode,
                               const GenerationParams& params, const QueryOptions& options = {});

/// Presentation-order flip for a task: a pure function of (seed, task id).
bool presentation_flipped(std::uint64_t seed, std::string_view task_id);

/// Judges one task: selects persona features, presents the responses in
/// seeded order, queries, and maps the verdict back to stored orientation.
EvalRecord judge(JudgeBackend& backend, const JudgeTask& task, JudgeMode mode,
                 const FeatureSelection& selection, std::uint64_t seed,
                 const GenerationParams& params, const QueryOptions& options = {});

struct UnresolvedTask {
  std::string task_id;
  ParseError last_error;
  std::vector<std::string> completions;
};

struct JudgeRunOptions {
  JudgeMode mode = JudgeMode::NoTieCertainty;
  FeatureSelection selection;
  std::uint64_t seed = 0;
  GenerationParams params;
  QueryOptions query;
  std::size_t jobs = 1;
};

struct JudgeRun {
  std::vector<EvalRecord> records;      // input order, resolved tasks only
  std::vector<UnresolvedTask> unresolved;  // input order
};

/// Judges every task with bounded parallelism. Output order follows input
/// order regardless of scheduling. Tasks whose retries run out are collected
/// in `unresolved`; any other error aborts the run. Tie-labelled tasks in a
/// no-tie mode are rejected with DataError.
JudgeRun run_judging(JudgeBackend& backend, std::span<const JudgeTask> tasks,
                     const JudgeRunOptions& options);

}  // namespace pjudge
