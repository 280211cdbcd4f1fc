#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pjudge/core.h"

namespace pjudge {

inline constexpr int kDefaultCertaintyThreshold = 80;

/// Fraction of records marked correct. Throws DataError on empty input.
double agreement(std::span<const EvalRecord> records);

/// Accuracy for one stratum; nullopt when the stratum is empty.
struct Stratum {
  std::size_t n = 0;
  std::size_t n_correct = 0;

  std::optional<double> accuracy() const;
};

Stratum stratum_of(std::span<const EvalRecord> records);

struct CertaintySplit {
  std::vector<EvalRecord> high;  // certainty >= threshold
  std::vector<EvalRecord> low;
};

/// Throws DataError when a record has no certainty.
CertaintySplit certainty_split(std::span<const EvalRecord> records,
                               int threshold = kDefaultCertaintyThreshold);

struct HistogramBin {
  int lo = 0;  // inclusive
  int hi = 0;  // exclusive, except the last bin which includes hi
  std::size_t n_correct = 0;
  std::size_t n_wrong = 0;

  std::optional<double> accuracy() const;
};

struct CertaintyHistogram {
  int lo = 40;
  int hi = 90;
  int bin_width = 10;
  std::vector<HistogramBin> bins;

  std::size_t total() const;
};

constexpr int clamp_certainty(int certainty, int lo = 40, int hi = 90) {
  return certainty < lo ? lo : (certainty > hi ? hi : certainty);
}

/// Clamps certainties into [lo, hi] and bins them. Bins are [lo, lo+w),
/// [lo+w, lo+2w), ... with the last bin closed at hi. Throws DataError when a
/// record has no certainty, UsageError on a bad range.
CertaintyHistogram clamp_and_bin(std::span<const EvalRecord> records, int lo = 40, int hi = 90,
                                 int bin_width = 10);

/// Arithmetic mean. Throws DataError on empty input.
double unweighted_average(std::span<const double> values);

/// Chance agreement: 1/2 without a tie option, 1/3 with one.
double baseline(JudgeMode mode);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct AgreementReport {
  DatasetTag dataset_tag = DatasetTag::PRISM;
  std::string model_id;
  JudgeMode mode = JudgeMode::NoTieCertainty;
  std::string selection;
  std::size_t n_total = 0;
  std::size_t n_correct = 0;
  double accuracy = 0;
  int threshold = kDefaultCertaintyThreshold;
  std::optional<Stratum> high;  // present when every record has a certainty
  std::optional<Stratum> low;
};

/// Aggregates records from one run. Throws DataError on empty input or when
/// records disagree on dataset, model, mode or selection.
AgreementReport summarize(std::span<const EvalRecord> records,
                          int threshold = kDefaultCertaintyThreshold);

/// "0.750 (150/200)"; "n/a (0/0)" when n_total is zero.
std::string format_cell(std::size_t n_correct, std::size_t n_total);

/// Whether a printed three-decimal ratio equals n_correct/n_total rounded to
/// three decimals. Used to flag inconsistent published count/ratio pairs.
bool ratio_consistent(double printed, std::size_t n_correct, std::size_t n_total);

// ---------------------------------------------------------------------------
// Human annotations
// ---------------------------------------------------------------------------

struct AnnotationRecord {
  std::string task_id;
  std::string annotator_id;
  Choice choice = Choice::A;  // canonical orientation
  int certainty = 50;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// No choice has a strict majority.
struct NoMajority {
  std::size_t votes = 0;
};

using MajorityOutcome = std::variant<Verdict, NoMajority>;

/// Strict-majority choice over one task's annotations; certainty is the mean
/// certainty of the majority voters, rounded half up. Throws DataError with
/// fewer than two annotations or mixed task ids.
MajorityOutcome majority_vote(std::span<const AnnotationRecord> annotations);

/// Annotations grouped by task id (sorted by task id).
std::map<std::string, std::vector<AnnotationRecord>> group_by_task(
    std::span<const AnnotationRecord> annotations);

struct MajoritySummary {
  std::size_t n_tasks = 0;
  std::size_t n_no_majority = 0;
  std::size_t n_correct = 0;  // among tasks with a majority

  /// Accuracy over tasks with a majority; nullopt when there are none.
  std::optional<double> accuracy() const;
};

/// Majority-vote accuracy against ground truth. Tasks without a majority are
/// counted separately and excluded from the denominator. Throws DataError when
/// a task has no ground truth.
MajoritySummary majority_vote_accuracy(std::span<const AnnotationRecord> annotations,
                                       const std::map<std::string, Choice>& ground_truth);

/// Fraction of agreeing unordered annotator pairs for one task.
double pairwise_agreement(std::span<const AnnotationRecord> task_annotations);

struct BootstrapResult {
  double mean = 0;
  double std = 0;  // population standard deviation over resamples
};

/// Each resample draws `sample_size` tasks without replacement from the
/// annotated tasks and averages their pairwise agreement. Resample r uses the
/// stream derive_seed(seed, r), and tasks are ordered by id first, so the
/// result depends on neither input order nor thread count. Throws DataError
/// when sample_size exceeds the number of tasks or a task has fewer than two
/// annotations.
BootstrapResult bootstrap_pairwise_agreement(std::span<const AnnotationRecord> annotations,
                                             std::size_t resamples = 1000,
                                             std::size_t sample_size = 30,
                                             std::uint64_t seed = 0);

}  // namespace pjudge
