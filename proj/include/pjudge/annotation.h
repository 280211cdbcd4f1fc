#pragma once

// Human annotation study: balanced assignment of tasks to annotators, an
// append-only annotation log, and export for the vote/bootstrap metrics.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "pjudge/core.h"
#include "pjudge/json_io.h"
#include "pjudge/metrics.h"

namespace pjudge {

struct StudyConfig {
  std::size_t annotators_per_task = 3;
  std::size_t tasks_per_annotator = 30;
  std::uint64_t seed = 0;
  /// Upper bound on annotator slots; create_study fails if the design needs more.
  std::optional<std::size_t> max_annotators;
};

/// max(annotators_per_task, ceil(n_tasks * annotators_per_task / capacity)).
std::size_t required_annotators(std::size_t n_tasks, std::size_t annotators_per_task,
                                std::size_t tasks_per_annotator);

/// The design cannot fit within the allowed number of annotators.
class CapacityError : public UsageError {
 public:
  CapacityError(const std::string& what, std::size_t required)
      : UsageError(what), required_(required) {}
  std::size_t required() const { return required_; }

 private:
  std::size_t required_;
};

enum class AnnotationErrorKind {
  UnknownAnnotator,
  NotAssigned,
  ConflictingResubmission,
  InvalidChoice,
  InvalidCertainty,
  StudyFull,
};

std::string_view to_string(AnnotationErrorKind kind);

class AnnotationError : public std::runtime_error {
 public:
  AnnotationError(AnnotationErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  AnnotationErrorKind kind() const { return kind_; }

 private:
  AnnotationErrorKind kind_;
};

struct AssignmentItem {
  std::string task_id;
  bool flipped = false;  // response_1 is the stored response B
};

struct Assignment {
  std::string annotator_id;
  std::vector<AssignmentItem> items;  // presentation order
  std::set<std::string> completed;
  bool registered = false;
  std::map<std::string, std::string> attributes;  // optional registration data
};

/// One submission as received: choice refers to the presented order (1 or 2).
struct Submission {
  std::string annotator_id;
  std::string task_id;
  int choice = 1;
  int certainty = 50;
  std::int64_t timestamp_ms = 0;
};

enum class SubmitStatus { Stored, Duplicate };

struct ExportResult {
  std::vector<AnnotationRecord> records;  // sorted by (task_id, annotator_id)
  bool complete = false;
};

struct StudyStats {
  std::size_t tasks = 0;
  std::size_t annotator_slots = 0;
  std::size_t registered = 0;
  std::size_t judgments_expected = 0;
  std::size_t judgments_done = 0;
  std::size_t tasks_fully_annotated = 0;
};

/// Study state without synchronisation or persistence.
class StudyState {
 public:
  /// Seeded balanced design: every task goes to annotators_per_task distinct
  /// annotators, nobody gets more than tasks_per_annotator tasks, and the
  /// response order of each (annotator, task) pair is randomised.
  /// Throws CapacityError when max_annotators is too small.
  static StudyState create(std::vector<JudgeTask> tasks, StudyConfig config);

  const StudyConfig& config() const { return config_; }
  const std::vector<JudgeTask>& tasks() const { return tasks_; }
  const std::vector<Assignment>& assignments() const { return assignments_; }
  const std::vector<Submission>& submissions() const { return submissions_; }

  /// Claims the next free annotator slot.
  std::string register_annotator(std::map<std::string, std::string> attributes = {});
  SubmitStatus submit(const Submission& submission);

  const Assignment& assignment(const std::string& annotator_id) const;
  const JudgeTask& task(const std::string& task_id) const;
  /// Next unfinished item, or nullptr when the assignment is done.
  const AssignmentItem* next_item(const std::string& annotator_id) const;

  ExportResult export_annotations() const;
  StudyStats stats() const;

 private:
  StudyConfig config_;
  std::vector<JudgeTask> tasks_;
  std::map<std::string, std::size_t> task_index_;
  std::vector<Assignment> assignments_;
  std::map<std::string, std::size_t> annotator_index_;
  std::size_t next_slot_ = 0;
  std::vector<Submission> submissions_;
  std::map<std::pair<std::string, std::string>, std::size_t> submission_index_;
};

StudyState create_study(std::vector<JudgeTask> tasks, StudyConfig config);
ExportResult export_annotations(const StudyState& study);

nlohmann::ordered_json study_config_to_json(const StudyConfig& config);
StudyConfig study_config_from_json(const nlohmann::ordered_json& j);

/// Thread-safe study with optional persistence.
///
/// A persistent study lives in a directory holding log.jsonl (append-only:
/// one create event, then register and annotate events) and snapshot.json (a
/// compacted copy of the log plus the number of log lines it covers). Opening
/// a directory loads the snapshot and replays the log lines after it.
class AnnotationService {
 public:
  using Clock = std::function<std::int64_t()>;

  /// In-memory study.
  explicit AnnotationService(StudyState state, Clock clock = {});
  /// New persistent study; fails if dir already holds a log.
  static std::unique_ptr<AnnotationService> create(const std::filesystem::path& dir,
                                                   std::vector<JudgeTask> tasks,
                                                   StudyConfig config, Clock clock = {},
                                                   std::size_t snapshot_every = 100);
  static std::unique_ptr<AnnotationService> open(const std::filesystem::path& dir,
                                                 Clock clock = {},
                                                 std::size_t snapshot_every = 100);

  std::string register_annotator(std::map<std::string, std::string> attributes = {});
  /// Validates and stores a submission stamped with the service clock.
  SubmitStatus submit(const std::string& annotator_id, const std::string& task_id, int choice,
                      int certainty);

  /// The /assignments payload for an annotator.
  nlohmann::ordered_json next_task_payload(const std::string& annotator_id) const;
  ExportResult export_annotations() const;
  StudyStats stats() const;
  StudyState state() const;

  /// Writes snapshot.json now (persistent studies only).
  void snapshot();

 private:
  AnnotationService(StudyState state, Clock clock, std::filesystem::path dir,
                    std::size_t log_lines, std::size_t snapshot_every);
  void append(const nlohmann::ordered_json& event);
  void snapshot_locked();

  mutable std::shared_mutex mutex_;
  StudyState state_;
  Clock clock_;
  std::optional<std::filesystem::path> dir_;
  std::ofstream log_;
  std::size_t log_lines_ = 0;
  std::size_t snapshot_every_ = 100;
  std::size_t since_snapshot_ = 0;
};

}  // namespace pjudge
