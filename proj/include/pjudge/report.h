#pragma once

// Run orchestration behind the CLI: judge, ablate and report.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pjudge/backend.h"
#include "pjudge/datasets.h"
#include "pjudge/judge.h"
#include "pjudge/metrics.h"
#include "pjudge/persona.h"

namespace pjudge {

enum class BackendKind { Remote, Mock, Replay };
enum class SourceFormat { Native, Tasks };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);
std::string_view to_string(SourceFormat format);
SourceFormat parse_source_format(std::string_view text);

struct RunConfig {
  DatasetTag dataset_tag = DatasetTag::PRISM;
  std::filesystem::path source;
  /// Native: the dataset's own layout. Tasks: canonical task JSONL.
  SourceFormat source_format = SourceFormat::Native;
  std::string model_id = "mock";
  BackendKind backend = BackendKind::Mock;
  JudgeMode mode = JudgeMode::NoTieCertainty;
  FeatureSelection selection;
  int threshold = kDefaultCertaintyThreshold;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path out_dir;

  double temperature = 0.7;
  double top_p = 0.95;
  int max_output_tokens = 512;
  int max_retries = kDefaultMaxRetries;
  std::optional<std::filesystem::path> mock_rules;  // mock backend only
  std::optional<std::filesystem::path> embeddings;  // PR only; hashing embedder otherwise
  std::optional<std::filesystem::path> refusal_phrases;
  std::size_t limit = 1000;  // PRISM
  std::size_t ec_n = 500;    // EC
  std::size_t respondents_per_question = 200;  // OpinionQA

  GenerationParams generation_params() const;
};

/// Throws UsageError for invalid combinations (replay without an existing
/// cache directory, mock rules with a non-mock backend, threshold outside
/// 1-100, ...). Remote credentials are checked when the backend is built.
void validate_config(const RunConfig& config);

nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::ordered_json& j);

/// Loads the configured source into tasks. Native sources go through the
/// dataset adapter (ties kept only in WithTie mode). Tie-labelled canonical
/// tasks are dropped in no-tie modes and counted in the load report.
LoadResult load_tasks(const RunConfig& config);

/// Builds the configured backend. Remote reads credentials from the
/// environment and throws BackendError without them.
std::unique_ptr<JudgeBackend> make_backend(const RunConfig& config);

struct RunSummary {
  std::filesystem::path run_dir;
  std::size_t n_tasks = 0;
  std::size_t n_records = 0;
  std::size_t n_unresolved = 0;
  std::uint64_t backend_calls = 0;
  std::optional<AgreementReport> report;  // empty when nothing resolved
};

/// Judges the configured dataset and writes to config.out_dir:
///   records.jsonl     one EvalRecord per line
///   unresolved.jsonl  tasks whose retries ran out, with their completions
///   config.json       the resolved RunConfig
///   manifest.json     input digests and load/run counts
/// `backend` overrides make_backend(config) when given.
RunSummary cmd_judge(const RunConfig& config, JudgeBackend* backend = nullptr);

struct AblationRow {
  std::string selection;
  AgreementReport report;
  std::size_t n_unresolved = 0;
};

/// One judging pass per selection into <out_dir>/<selection label>/, sharing
/// the seed, then ablation.csv (and persona_effect.csv when NoPersona is one
/// of the selections) in out_dir. Needs at least two selections.
std::vector<AblationRow> cmd_ablate(const RunConfig& config,
                                    const std::vector<FeatureSelection>& selections,
                                    JudgeBackend* backend = nullptr);

struct ReportOptions {
  std::vector<std::filesystem::path> run_dirs;
  std::filesystem::path out_dir;
  /// Overrides each run's threshold. Without it, runs must agree unless forced.
  std::optional<int> threshold;
  bool force = false;
};

struct ReportBundle {
  std::vector<AgreementReport> runs;
  std::vector<std::filesystem::path> files;
};

/// Reads completed run directories and writes:
///   agreement_grid.csv   accuracy per (model, mode, selection) x dataset with
///                        the chance baseline and the unweighted average
///   certainty_split.csv  high/low certainty cells "acc (correct/total)"
///   histograms/*.json    clamped 40-90 certainty bins per run
///   summary.md           the same numbers in readable form
/// Every number is derived from records.jsonl; config.json only supplies the
/// certainty threshold.
ReportBundle cmd_report(const ReportOptions& options);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBackend = 3;

}  // namespace pjudge
