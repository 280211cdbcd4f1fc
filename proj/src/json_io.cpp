#include "pjudge/json_io.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "pjudge/persona.h"

namespace pjudge {

namespace fs = std::filesystem;

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

json to_json(const Persona& persona) {
  json attrs = json::array();
  for (const auto& a : persona.attributes) {
    attrs.push_back(json{{"name", a.name}, {"value", a.value}});
  }
  return json{{"dataset_tag", to_string(persona.dataset_tag)}, {"attributes", std::move(attrs)}};
}

json to_json(const JudgeTask& task) {
  json meta = json::object();
  for (const auto& [k, v] : task.meta) meta[k] = v;
  return json{{"id", task.id},
              {"dataset_tag", to_string(task.dataset_tag)},
              {"question", task.question},
              {"response_a", task.response_a},
              {"response_b", task.response_b},
              {"persona", to_json(task.persona)},
              {"ground_truth", to_string(task.ground_truth)},
              {"meta", std::move(meta)}};
}

json to_json(const Verdict& verdict) {
  return json{{"choice", to_string(verdict.choice)},
              {"certainty", verdict.certainty ? json(*verdict.certainty) : json(nullptr)},
              {"raw", verdict.raw}};
}

json to_json(const EvalRecord& record) {
  return json{{"task_id", record.task_id},
              {"dataset_tag", to_string(record.dataset_tag)},
              {"model_id", record.model_id},
              {"mode", to_string(record.mode)},
              {"selection", record.selection},
              {"flipped", record.flipped},
              {"verdict", to_json(record.verdict)},
              {"ground_truth", to_string(record.ground_truth)},
              {"correct", record.correct},
              {"attempts", record.attempts}};
}

Persona persona_from_json(const json& j) {
  const auto tag = parse_dataset_tag(require_string(j, "dataset_tag"));
  Persona persona{tag, {}};
  const auto& attrs = require(j, "attributes");
  if (!attrs.is_array()) throw DataError("persona attributes must be an array");
  for (const auto& a : attrs) {
    persona.attributes.push_back({require_string(a, "name"), require_string(a, "value")});
  }
  validate_persona(persona);
  return persona;
}

JudgeTask task_from_json(const json& j) {
  JudgeTask task;
  task.id = require_string(j, "id");
  task.dataset_tag = parse_dataset_tag(require_string(j, "dataset_tag"));
  task.question = require_string(j, "question");
  task.response_a = require_string(j, "response_a");
  task.response_b = require_string(j, "response_b");
  task.persona = persona_from_json(require(j, "persona"));
  task.ground_truth = parse_choice(require_string(j, "ground_truth"));
  if (j.contains("meta")) {
    for (const auto& [k, v] : j.at("meta").items()) {
      task.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  validate_task(task);
  return task;
}

Verdict verdict_from_json(const json& j) {
  Verdict v;
  v.choice = parse_choice(require_string(j, "choice"));
  const auto& c = require(j, "certainty");
  if (!c.is_null()) v.certainty = c.get<int>();
  v.raw = require_string(j, "raw");
  return v;
}

EvalRecord record_from_json(const json& j) {
  EvalRecord r;
  r.task_id = require_string(j, "task_id");
  r.dataset_tag = parse_dataset_tag(require_string(j, "dataset_tag"));
  r.model_id = require_string(j, "model_id");
  r.mode = parse_mode(require_string(j, "mode"));
  r.selection = j.value("selection", std::string("All"));
  r.flipped = require(j, "flipped").get<bool>();
  r.verdict = verdict_from_json(require(j, "verdict"));
  r.ground_truth = parse_choice(require_string(j, "ground_truth"));
  r.correct = require(j, "correct").get<bool>();
  r.attempts = require(j, "attempts").get<int>();
  if (r.correct != is_correct(r.verdict.choice, r.ground_truth)) {
    throw DataError("record " + r.task_id + ": stored correctness disagrees with verdict");
  }
  return r;
}

std::string to_jsonl_line(const json& j) { return j.dump() + "\n"; }

std::vector<json> read_jsonl(std::istream& in) {
  std::vector<json> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      ++index;
      continue;
    }
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), index);
    }
    ++index;
  }
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_jsonl(in);
}

std::vector<JudgeTask> read_tasks(std::istream& in) {
  std::vector<JudgeTask> tasks;
  const auto lines = read_jsonl(in);
  tasks.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      tasks.push_back(task_from_json(lines[i]));
    } catch (const DataError& e) {
      throw DataError(e.what(), i);
    } catch (const UsageError& e) {
      throw DataError(e.what(), i);
    } catch (const json::exception& e) {
      throw DataError(e.what(), i);
    }
  }
  return tasks;
}

std::vector<JudgeTask> read_tasks(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_tasks(in);
}

void write_tasks(std::ostream& out, const std::vector<JudgeTask>& tasks) {
  for (const auto& t : tasks) out << to_jsonl_line(to_json(t));
}

void write_tasks(const fs::path& path, const std::vector<JudgeTask>& tasks) {
  std::ostringstream out;
  write_tasks(out, tasks);
  write_file_atomic(path, out.str());
}

std::vector<EvalRecord> read_records(const fs::path& path) {
  std::vector<EvalRecord> records;
  const auto lines = read_jsonl(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      records.push_back(record_from_json(lines[i]));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what(), i);
    } catch (const std::exception& e) {
      throw DataError(path.string() + ": " + e.what(), i);
    }
  }
  return records;
}

void write_records(const fs::path& path, const std::vector<EvalRecord>& records) {
  std::string content;
  for (const auto& r : records) content += to_jsonl_line(to_json(r));
  write_file_atomic(path, content);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  static std::atomic<std::uint64_t> counter{0};
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

}  // namespace pjudge
