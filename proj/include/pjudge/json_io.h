#pragma once

// Line-delimited JSON interchange for tasks and evaluation records.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pjudge/core.h"

namespace pjudge {

using json = nlohmann::ordered_json;

json to_json(const Persona& persona);
json to_json(const JudgeTask& task);
json to_json(const Verdict& verdict);
json to_json(const EvalRecord& record);

Persona persona_from_json(const json& j);
JudgeTask task_from_json(const json& j);
Verdict verdict_from_json(const json& j);
EvalRecord record_from_json(const json& j);

/// One compact JSON object per line, "\n" terminated.
std::string to_jsonl_line(const json& j);

std::vector<JudgeTask> read_tasks(std::istream& in);
std::vector<JudgeTask> read_tasks(const std::filesystem::path& path);
void write_tasks(std::ostream& out, const std::vector<JudgeTask>& tasks);
void write_tasks(const std::filesystem::path& path, const std::vector<JudgeTask>& tasks);

std::vector<EvalRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records);

/// Parses every non-blank line as JSON. Malformed lines raise DataError with
/// the zero-based line index.
std::vector<json> read_jsonl(std::istream& in);
std::vector<json> read_jsonl(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace pjudge
