#include "pjudge/annotation.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <numeric>

#include "pjudge/persona.h"
#include "pjudge/prompt.h"
#include "pjudge/random.h"

namespace pjudge {

namespace fs = std::filesystem;

std::string_view to_string(AnnotationErrorKind kind) {
  switch (kind) {
    case AnnotationErrorKind::UnknownAnnotator: return "UnknownAnnotator";
    case AnnotationErrorKind::NotAssigned: return "NotAssigned";
    case AnnotationErrorKind::ConflictingResubmission: return "ConflictingResubmission";
    case AnnotationErrorKind::InvalidChoice: return "InvalidChoice";
    case AnnotationErrorKind::InvalidCertainty: return "InvalidCertainty";
    case AnnotationErrorKind::StudyFull: return "StudyFull";
  }
  return "?";
}

std::size_t required_annotators(std::size_t n_tasks, std::size_t annotators_per_task,
                                std::size_t tasks_per_annotator) {
  if (annotators_per_task == 0 || tasks_per_annotator == 0) {
    throw UsageError("annotators_per_task and tasks_per_annotator must be positive");
  }
  const auto judgments = n_tasks * annotators_per_task;
  const auto by_capacity = (judgments + tasks_per_annotator - 1) / tasks_per_annotator;
  return std::max(annotators_per_task, by_capacity);
}

// ---------------------------------------------------------------------------
// StudyState
// ---------------------------------------------------------------------------

StudyState StudyState::create(std::vector<JudgeTask> tasks, StudyConfig config) {
  const auto k = config.annotators_per_task;
  const auto m = required_annotators(tasks.size(), k, config.tasks_per_annotator);
  if (config.max_annotators && *config.max_annotators < m) {
    throw CapacityError("the design needs at least " + std::to_string(m) + " annotators (" +
                            std::to_string(tasks.size()) + " tasks x " + std::to_string(k) +
                            " annotations, at most " +
                            std::to_string(config.tasks_per_annotator) + " per annotator)",
                        m);
  }

  StudyState s;
  s.config_ = config;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    validate_task(tasks[i]);
    if (!s.task_index_.emplace(tasks[i].id, i).second) {
      throw DataError("duplicate task id '" + tasks[i].id + "'", i);
    }
  }
  s.tasks_ = std::move(tasks);

  s.assignments_.resize(m);
  for (std::size_t slot = 0; slot < m; ++slot) {
    char id[32];
    std::snprintf(id, sizeof id, "ann-%016llx",
                  static_cast<unsigned long long>(
                      derive_seed(config.seed, "annotator-" + std::to_string(slot))));
    s.assignments_[slot].annotator_id = id;
    if (!s.annotator_index_.emplace(id, slot).second) {
      throw UsageError("annotator id collision; choose another seed");
    }
  }

  // Judgment p = (task position, copy) goes to slot p mod m. Any k consecutive
  // positions land on distinct slots because k <= m, and loads differ by at
  // most one, so nobody exceeds capacity.
  std::vector<std::size_t> order(s.tasks_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, "study-task-order"));
  rng.shuffle(std::span<std::size_t>(order));
  std::size_t p = 0;
  for (const auto t : order) {
    const auto& task_id = s.tasks_[t].id;
    for (std::size_t c = 0; c < k; ++c, ++p) {
      const auto slot = p % m;
      const bool flipped = (derive_seed(derive_seed(config.seed, task_id), slot) & 1u) != 0;
      s.assignments_[slot].items.push_back(AssignmentItem{task_id, flipped});
    }
  }
  for (std::size_t slot = 0; slot < m; ++slot) {
    Rng item_rng(derive_seed(config.seed, static_cast<std::uint64_t>(slot)));
    item_rng.shuffle(std::span<AssignmentItem>(s.assignments_[slot].items));
  }
  return s;
}

std::string StudyState::register_annotator(std::map<std::string, std::string> attributes) {
  if (next_slot_ >= assignments_.size()) {
    throw AnnotationError(AnnotationErrorKind::StudyFull, "every annotator slot is taken");
  }
  auto& a = assignments_[next_slot_++];
  a.registered = true;
  a.attributes = std::move(attributes);
  return a.annotator_id;
}

const Assignment& StudyState::assignment(const std::string& annotator_id) const {
  const auto it = annotator_index_.find(annotator_id);
  if (it == annotator_index_.end() || !assignments_[it->second].registered) {
    throw AnnotationError(AnnotationErrorKind::UnknownAnnotator,
                          "unknown annotator '" + annotator_id + "'");
  }
  return assignments_[it->second];
}

const JudgeTask& StudyState::task(const std::string& task_id) const {
  const auto it = task_index_.find(task_id);
  if (it == task_index_.end()) throw DataError("unknown task '" + task_id + "'");
  return tasks_[it->second];
}

const AssignmentItem* StudyState::next_item(const std::string& annotator_id) const {
  const auto& a = assignment(annotator_id);
  for (const auto& item : a.items) {
    if (!a.completed.contains(item.task_id)) return &item;
  }
  return nullptr;
}

SubmitStatus StudyState::submit(const Submission& sub) {
  const auto& a = assignment(sub.annotator_id);
  const auto slot = annotator_index_.at(sub.annotator_id);
  if (sub.choice != 1 && sub.choice != 2) {
    throw AnnotationError(AnnotationErrorKind::InvalidChoice, "choice must be 1 or 2");
  }
  if (sub.certainty < kMinCertainty || sub.certainty > kMaxCertainty) {
    throw AnnotationError(AnnotationErrorKind::InvalidCertainty,
                          "certainty must be an integer in 1-100");
  }
  const bool assigned = std::any_of(a.items.begin(), a.items.end(), [&](const AssignmentItem& i) {
    return i.task_id == sub.task_id;
  });
  if (!assigned) {
    throw AnnotationError(AnnotationErrorKind::NotAssigned,
                          "task '" + sub.task_id + "' is not assigned to this annotator");
  }
  const auto key = std::make_pair(sub.task_id, sub.annotator_id);
  if (const auto it = submission_index_.find(key); it != submission_index_.end()) {
    const auto& prior = submissions_[it->second];
    if (prior.choice == sub.choice && prior.certainty == sub.certainty) {
      return SubmitStatus::Duplicate;
    }
    throw AnnotationError(AnnotationErrorKind::ConflictingResubmission,
                          "task '" + sub.task_id + "' was already annotated differently");
  }
  submission_index_.emplace(key, submissions_.size());
  submissions_.push_back(sub);
  assignments_[slot].completed.insert(sub.task_id);
  return SubmitStatus::Stored;
}

ExportResult StudyState::export_annotations() const {
  ExportResult out;
  for (const auto& sub : submissions_) {
    const auto& a = assignments_[annotator_index_.at(sub.annotator_id)];
    const auto item = std::find_if(a.items.begin(), a.items.end(), [&](const AssignmentItem& i) {
      return i.task_id == sub.task_id;
    });
    const auto presented = sub.choice == 1 ? Choice::A : Choice::B;
    out.records.push_back(AnnotationRecord{sub.task_id, sub.annotator_id,
                                           canonical_orientation(presented, item->flipped),
                                           sub.certainty, sub.timestamp_ms});
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const AnnotationRecord& x, const AnnotationRecord& y) {
              return std::tie(x.task_id, x.annotator_id) < std::tie(y.task_id, y.annotator_id);
            });
  out.complete = !out.records.empty() &&
                 out.records.size() == tasks_.size() * config_.annotators_per_task;
  return out;
}

StudyStats StudyState::stats() const {
  StudyStats st;
  st.tasks = tasks_.size();
  st.annotator_slots = assignments_.size();
  st.registered = next_slot_;
  st.judgments_expected = tasks_.size() * config_.annotators_per_task;
  st.judgments_done = submissions_.size();
  std::map<std::string, std::size_t> per_task;
  for (const auto& sub : submissions_) ++per_task[sub.task_id];
  for (const auto& [id, n] : per_task) {
    st.tasks_fully_annotated += n == config_.annotators_per_task ? 1 : 0;
  }
  return st;
}

StudyState create_study(std::vector<JudgeTask> tasks, StudyConfig config) {
  return StudyState::create(std::move(tasks), std::move(config));
}

ExportResult export_annotations(const StudyState& study) { return study.export_annotations(); }

json study_config_to_json(const StudyConfig& c) {
  return json{{"annotators_per_task", c.annotators_per_task},
              {"tasks_per_annotator", c.tasks_per_annotator},
              {"seed", c.seed},
              {"max_annotators", c.max_annotators ? json(*c.max_annotators) : json(nullptr)}};
}

StudyConfig study_config_from_json(const json& j) {
  StudyConfig c;
  c.annotators_per_task = j.at("annotators_per_task").get<std::size_t>();
  c.tasks_per_annotator = j.at("tasks_per_annotator").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_annotators") && !j.at("max_annotators").is_null()) {
    c.max_annotators = j.at("max_annotators").get<std::size_t>();
  }
  return c;
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

namespace {

json create_event(const std::vector<JudgeTask>& tasks, const StudyConfig& config) {
  json task_list = json::array();
  for (const auto& t : tasks) task_list.push_back(to_json(t));
  return json{{"event", "create"}, {"config", study_config_to_json(config)}, {"tasks", task_list}};
}

json register_event(const std::string& id, const std::map<std::string, std::string>& attrs) {
  json a = json::object();
  for (const auto& [k, v] : attrs) a[k] = v;
  return json{{"event", "register"}, {"annotator_id", id}, {"attributes", a}};
}

json annotate_event(const Submission& s) {
  return json{{"event", "annotate"},   {"annotator_id", s.annotator_id},
              {"task_id", s.task_id},   {"choice", s.choice},
              {"certainty", s.certainty}, {"timestamp_ms", s.timestamp_ms}};
}

StudyState state_from_create(const json& event) {
  if (event.value("event", std::string{}) != "create") {
    throw DataError("annotation log must start with a create event");
  }
  std::vector<JudgeTask> tasks;
  for (const auto& t : event.at("tasks")) tasks.push_back(task_from_json(t));
  return StudyState::create(std::move(tasks), study_config_from_json(event.at("config")));
}

void apply_event(StudyState& state, const json& event, std::size_t index) {
  try {
    const auto type = event.at("event").get<std::string>();
    if (type == "register") {
      std::map<std::string, std::string> attrs;
      for (const auto& [k, v] : event.at("attributes").items()) attrs[k] = v.get<std::string>();
      const auto id = state.register_annotator(std::move(attrs));
      if (id != event.at("annotator_id").get<std::string>()) {
        throw DataError("log replay issued a different annotator id", index);
      }
    } else if (type == "annotate") {
      Submission s{event.at("annotator_id").get<std::string>(),
                   event.at("task_id").get<std::string>(), event.at("choice").get<int>(),
                   event.at("certainty").get<int>(), event.at("timestamp_ms").get<std::int64_t>()};
      state.submit(s);
    } else {
      throw DataError("unknown log event '" + type + "'", index);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed log event: ") + e.what(), index);
  } catch (const AnnotationError& e) {
    throw DataError(std::string("log event rejected on replay: ") + e.what(), index);
  }
}

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

// ---------------------------------------------------------------------------
// AnnotationService
// ---------------------------------------------------------------------------

AnnotationService::AnnotationService(StudyState state, Clock clock)
    : state_(std::move(state)), clock_(clock ? std::move(clock) : Clock(system_clock_ms)) {}

AnnotationService::AnnotationService(StudyState state, Clock clock, fs::path dir,
                                     std::size_t log_lines, std::size_t snapshot_every)
    : state_(std::move(state)),
      clock_(clock ? std::move(clock) : Clock(system_clock_ms)),
      dir_(std::move(dir)),
      log_lines_(log_lines),
      snapshot_every_(std::max<std::size_t>(1, snapshot_every)) {
  log_.open(*dir_ / "log.jsonl", std::ios::binary | std::ios::app);
  if (!log_) throw DataError("cannot open annotation log in " + dir_->string());
}

std::unique_ptr<AnnotationService> AnnotationService::create(const fs::path& dir,
                                                             std::vector<JudgeTask> tasks,
                                                             StudyConfig config, Clock clock,
                                                             std::size_t snapshot_every) {
  if (fs::exists(dir / "log.jsonl")) {
    throw UsageError("an annotation study already exists in " + dir.string());
  }
  fs::create_directories(dir);
  const auto event = create_event(tasks, config);
  auto state = StudyState::create(std::move(tasks), config);
  write_file_atomic(dir / "log.jsonl", to_jsonl_line(event));
  return std::unique_ptr<AnnotationService>(
      new AnnotationService(std::move(state), std::move(clock), dir, 1, snapshot_every));
}

std::unique_ptr<AnnotationService> AnnotationService::open(const fs::path& dir, Clock clock,
                                                           std::size_t snapshot_every) {
  std::ifstream in(dir / "log.jsonl", std::ios::binary);
  if (!in) throw DataError("no annotation log in " + dir.string());
  const auto log = read_jsonl(in);
  if (log.empty()) throw DataError("annotation log in " + dir.string() + " is empty");

  // The snapshot is a compacted log prefix; fall back to a full replay when it
  // is missing or claims more lines than the log has.
  std::vector<json> events;
  std::size_t covered = 0;
  if (fs::is_regular_file(dir / "snapshot.json")) {
    try {
      const auto snap = json::parse(read_file(dir / "snapshot.json"));
      const auto lines = snap.at("log_lines").get<std::size_t>();
      if (lines >= 1 && lines <= log.size()) {
        events = snap.at("events").get<std::vector<json>>();
        covered = lines;
      }
    } catch (const nlohmann::json::exception&) {
      events.clear();
      covered = 0;
    }
  }
  if (covered == 0) {
    events = log;
  } else {
    events.insert(events.end(), log.begin() + static_cast<std::ptrdiff_t>(covered), log.end());
  }

  auto state = state_from_create(events.front());
  for (std::size_t i = 1; i < events.size(); ++i) apply_event(state, events[i], i);
  return std::unique_ptr<AnnotationService>(
      new AnnotationService(std::move(state), std::move(clock), dir, log.size(), snapshot_every));
}

void AnnotationService::append(const json& event) {
  if (!dir_) return;
  log_ << to_jsonl_line(event);
  log_.flush();
  if (!log_) throw DataError("failed to append to the annotation log");
  ++log_lines_;
  if (++since_snapshot_ >= snapshot_every_) snapshot_locked();
}

void AnnotationService::snapshot_locked() {
  if (!dir_) return;
  json events = json::array({create_event(state_.tasks(), state_.config())});
  for (const auto& a : state_.assignments()) {
    if (a.registered) events.push_back(register_event(a.annotator_id, a.attributes));
  }
  for (const auto& s : state_.submissions()) events.push_back(annotate_event(s));
  const json snap{{"log_lines", log_lines_}, {"events", events}};
  write_file_atomic(*dir_ / "snapshot.json", snap.dump() + "\n");
  since_snapshot_ = 0;
}

void AnnotationService::snapshot() {
  std::unique_lock lock(mutex_);
  snapshot_locked();
}

std::string AnnotationService::register_annotator(std::map<std::string, std::string> attributes) {
  std::unique_lock lock(mutex_);
  const auto id = state_.register_annotator(attributes);
  append(register_event(id, attributes));
  return id;
}

SubmitStatus AnnotationService::submit(const std::string& annotator_id,
                                       const std::string& task_id, int choice, int certainty) {
  std::unique_lock lock(mutex_);
  const Submission s{annotator_id, task_id, choice, certainty, clock_()};
  const auto status = state_.submit(s);
  if (status == SubmitStatus::Stored) append(annotate_event(s));
  return status;
}

json AnnotationService::next_task_payload(const std::string& annotator_id) const {
  std::shared_lock lock(mutex_);
  const auto& a = state_.assignment(annotator_id);
  json progress{{"completed", a.completed.size()}, {"total", a.items.size()}};
  const auto* item = state_.next_item(annotator_id);
  if (!item) return json{{"done", true}, {"progress", progress}};
  const auto& task = state_.task(item->task_id);
  json rubric = json::array();
  for (auto line : certainty_rubric()) rubric.push_back(line);
  return json{{"done", false},
              {"task_id", task.id},
              {"persona_lines", persona_lines(task.persona)},
              {"question", task.question},
              {"response_1", item->flipped ? task.response_b : task.response_a},
              {"response_2", item->flipped ? task.response_a : task.response_b},
              {"certainty_rubric", rubric},
              {"progress", progress}};
}

ExportResult AnnotationService::export_annotations() const {
  std::shared_lock lock(mutex_);
  return state_.export_annotations();
}

StudyStats AnnotationService::stats() const {
  std::shared_lock lock(mutex_);
  return state_.stats();
}

StudyState AnnotationService::state() const {
  std::shared_lock lock(mutex_);
  return state_;
}

}  // namespace pjudge
