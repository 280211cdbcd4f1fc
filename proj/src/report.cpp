#include "pjudge/report.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "pjudge/digest.h"
#include "pjudge/json_io.h"
#include "pjudge/refusal.h"
#include "pjudge/remote_backend.h"

namespace pjudge {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fixed(double value, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string fixed(const std::optional<double>& value, int digits = 4) {
  return value ? fixed(*value, digits) : std::string{};
}

/// File-name-safe rendering of a label.
std::string sanitize(std::string_view text) {
  std::string out;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    out += std::isalnum(u) || c == '-' || c == '_' || c == '.' ? c : '_';
  }
  return out;
}

json optional_path(const std::optional<fs::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

std::optional<fs::path> path_or_null(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return fs::path(j.at(key).get<std::string>());
}

/// CSV field quoting for labels that may contain commas or quotes.
std::string csv(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void require_existing_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw DataError(std::string(what) + " not found: " + path.string());
  }
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Remote: return "remote";
    case BackendKind::Mock: return "mock";
    case BackendKind::Replay: return "replay";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "remote") return BackendKind::Remote;
  if (text == "mock") return BackendKind::Mock;
  if (text == "replay") return BackendKind::Replay;
  throw UsageError("unknown backend: " + std::string(text));
}

std::string_view to_string(SourceFormat format) {
  return format == SourceFormat::Native ? "native" : "tasks";
}

SourceFormat parse_source_format(std::string_view text) {
  if (text == "native") return SourceFormat::Native;
  if (text == "tasks") return SourceFormat::Tasks;
  throw UsageError("unknown source format: " + std::string(text));
}

GenerationParams RunConfig::generation_params() const {
  return GenerationParams{model_id, temperature, top_p, max_output_tokens};
}

void validate_config(const RunConfig& c) {
  if (c.model_id.empty()) throw UsageError("--model is required");
  if (c.source.empty()) throw UsageError("--source is required");
  if (c.out_dir.empty()) throw UsageError("--out is required");
  if (c.threshold < kMinCertainty || c.threshold > kMaxCertainty + 1) {
    throw UsageError("--threshold must be in 1-101");
  }
  if (c.jobs == 0) throw UsageError("--jobs must be at least 1");
  if (c.max_retries < 0) throw UsageError("--max-retries must be >= 0");
  if (c.backend == BackendKind::Replay &&
      (!c.cache_dir || !fs::is_directory(*c.cache_dir))) {
    throw UsageError("the replay backend needs an existing --cache-dir");
  }
  if (c.mock_rules && c.backend != BackendKind::Mock) {
    throw UsageError("--rules only applies to the mock backend");
  }
  if (c.embeddings && c.dataset_tag != DatasetTag::PR) {
    throw UsageError("--embeddings only applies to the PR dataset");
  }
}

json config_to_json(const RunConfig& c) {
  return json{
      {"dataset", to_string(c.dataset_tag)},
      {"source", c.source.string()},
      {"source_format", to_string(c.source_format)},
      {"model", c.model_id},
      {"backend", to_string(c.backend)},
      {"mode", to_string(c.mode)},
      {"features", selection_label(c.selection)},
      {"threshold", c.threshold},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"cache_dir", optional_path(c.cache_dir)},
      {"out", c.out_dir.string()},
      {"temperature", c.temperature},
      {"top_p", c.top_p},
      {"max_output_tokens", c.max_output_tokens},
      {"max_retries", c.max_retries},
      {"rules", optional_path(c.mock_rules)},
      {"embeddings", optional_path(c.embeddings)},
      {"refusal_phrases", optional_path(c.refusal_phrases)},
      {"limit", c.limit},
      {"ec_n", c.ec_n},
      {"respondents_per_question", c.respondents_per_question},
  };
}

RunConfig config_from_json(const json& j) {
  try {
    RunConfig c;
    c.dataset_tag = parse_dataset_tag(j.at("dataset").get<std::string>());
    c.source = j.at("source").get<std::string>();
    c.source_format = parse_source_format(j.value("source_format", std::string("native")));
    c.model_id = j.at("model").get<std::string>();
    c.backend = parse_backend_kind(j.at("backend").get<std::string>());
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.selection = parse_selection(j.value("features", std::string("All")));
    c.threshold = j.value("threshold", kDefaultCertaintyThreshold);
    c.seed = j.value("seed", std::uint64_t{0});
    c.jobs = j.value("jobs", std::size_t{1});
    c.cache_dir = path_or_null(j, "cache_dir");
    c.out_dir = j.value("out", std::string{});
    c.temperature = j.value("temperature", 0.7);
    c.top_p = j.value("top_p", 0.95);
    c.max_output_tokens = j.value("max_output_tokens", 512);
    c.max_retries = j.value("max_retries", kDefaultMaxRetries);
    c.mock_rules = path_or_null(j, "rules");
    c.embeddings = path_or_null(j, "embeddings");
    c.refusal_phrases = path_or_null(j, "refusal_phrases");
    c.limit = j.value("limit", std::size_t{1000});
    c.ec_n = j.value("ec_n", std::size_t{500});
    c.respondents_per_question = j.value("respondents_per_question", std::size_t{200});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run config: ") + e.what());
  }
}

LoadResult load_tasks(const RunConfig& c) {
  require_existing_file(c.source, "dataset source");
  const bool ties = mode_allows_tie(c.mode);

  if (c.source_format == SourceFormat::Tasks) {
    LoadResult result;
    auto tasks = read_tasks(c.source);
    result.report.considered = tasks.size();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].dataset_tag != c.dataset_tag) {
        throw DataError("task '" + tasks[i].id + "' is tagged " +
                            std::string(to_string(tasks[i].dataset_tag)) + ", expected " +
                            std::string(to_string(c.dataset_tag)),
                        i);
      }
      if (!ties && tasks[i].ground_truth == Choice::Tie) {
        ++result.report.dropped["tie"];
        continue;
      }
      result.tasks.push_back(std::move(tasks[i]));
    }
    return result;
  }

  std::optional<RefusalDetector> refusal;
  if (c.refusal_phrases) refusal = RefusalDetector::from_file(*c.refusal_phrases);
  const RefusalDetector* refusal_ptr = refusal ? &*refusal : nullptr;

  switch (c.dataset_tag) {
    case DatasetTag::PRISM: {
      PrismOptions o;
      o.limit = c.limit;
      o.judge_model_ids = {c.model_id};
      o.include_ties = ties;
      o.refusal = refusal_ptr;
      return load_prism(c.source, o);
    }
    case DatasetTag::OpinionQA: {
      OpinionQaOptions o;
      o.respondents_per_question = c.respondents_per_question;
      o.seed = c.seed;
      return load_opinionqa(c.source, o);
    }
    case DatasetTag::EC: {
      EcOptions o;
      o.n = c.ec_n;
      o.include_ties = ties;
      o.seed = c.seed;
      return load_ec(c.source, o);
    }
    case DatasetTag::PR: {
      const auto triples = read_pr_triples(c.source);
      std::unique_ptr<Embedder> embedder;
      if (c.embeddings) {
        require_existing_file(*c.embeddings, "embedding file");
        embedder = std::make_unique<FileEmbedder>(*c.embeddings);
      } else {
        embedder = std::make_unique<HashingEmbedder>();
      }
      return pair_pr_tasks(triples, *embedder, c.jobs);
    }
  }
  throw UsageError("unsupported dataset");
}

std::unique_ptr<JudgeBackend> make_backend(const RunConfig& c) {
  switch (c.backend) {
    case BackendKind::Mock:
      if (c.mock_rules) {
        require_existing_file(*c.mock_rules, "mock rules file");
        try {
          return std::make_unique<ScriptedBackend>(
              nlohmann::json::parse(read_file(*c.mock_rules)));
        } catch (const nlohmann::json::exception& e) {
          throw UsageError("mock rules file " + c.mock_rules->string() + ": " + e.what());
        }
      }
      return std::make_unique<ScriptedBackend>(ScriptedBackend::default_rules());
    case BackendKind::Replay:
      return std::make_unique<ReplayBackend>();
    case BackendKind::Remote:
      return std::make_unique<RemoteBackend>(RemoteConfig::from_env());
  }
  throw UsageError("unsupported backend");
}

// ---------------------------------------------------------------------------
// judge
// ---------------------------------------------------------------------------

namespace {

json input_entry(const char* role, const fs::path& path) {
  return json{{"role", role}, {"path", path.string()}, {"sha256", sha256_file_hex(path)}};
}

json load_report_json(const LoadReport& r) {
  json dropped = json::object();
  for (const auto& [reason, n] : r.dropped) dropped[reason] = n;
  return json{{"considered", r.considered}, {"dropped", dropped}, {"notes", r.notes}};
}

}  // namespace

RunSummary cmd_judge(const RunConfig& config, JudgeBackend* backend) {
  validate_config(config);
  auto loaded = load_tasks(config);
  if (loaded.tasks.empty()) {
    throw DataError("no tasks left after loading " + config.source.string());
  }

  std::unique_ptr<JudgeBackend> owned;
  if (!backend) {
    owned = make_backend(config);
    backend = owned.get();
  }
  std::optional<DirectoryCache> cache;
  if (config.cache_dir) cache.emplace(*config.cache_dir);
  std::optional<RefusalDetector> refusal;
  if (config.refusal_phrases) refusal = RefusalDetector::from_file(*config.refusal_phrases);

  JudgeRunOptions options;
  options.mode = config.mode;
  options.selection = config.selection;
  options.seed = config.seed;
  options.params = config.generation_params();
  options.query.max_retries = config.max_retries;
  options.query.cache = cache ? &*cache : nullptr;
  options.query.refusal = refusal ? &*refusal : nullptr;
  options.jobs = config.jobs;

  const auto calls_before = backend->calls();
  auto run = run_judging(*backend, loaded.tasks, options);

  fs::create_directories(config.out_dir);
  write_records(config.out_dir / "records.jsonl", run.records);

  std::string unresolved;
  for (const auto& u : run.unresolved) {
    unresolved += to_jsonl_line(json{{"task_id", u.task_id},
                                     {"error", to_string(u.last_error.kind)},
                                     {"detail", u.last_error.detail},
                                     {"attempts", u.completions.size()},
                                     {"completions", u.completions}});
  }
  write_file_atomic(config.out_dir / "unresolved.jsonl", unresolved);

  const auto config_text = config_to_json(config).dump(2) + "\n";
  write_file_atomic(config.out_dir / "config.json", config_text);

  json inputs = json::array({input_entry("source", config.source)});
  if (config.mock_rules) inputs.push_back(input_entry("rules", *config.mock_rules));
  if (config.embeddings) inputs.push_back(input_entry("embeddings", *config.embeddings));
  if (config.refusal_phrases) {
    inputs.push_back(input_entry("refusal_phrases", *config.refusal_phrases));
  }
  const json manifest{
      {"tool", "pjudge"},
      {"version", kVersion},
      {"inputs", inputs},
      {"config_sha256", sha256_hex(config_text)},
      {"load", load_report_json(loaded.report)},
      {"tasks", loaded.tasks.size()},
      {"records", run.records.size()},
      {"unresolved", run.unresolved.size()},
  };
  write_file_atomic(config.out_dir / "manifest.json", manifest.dump(2) + "\n");

  RunSummary summary;
  summary.run_dir = config.out_dir;
  summary.n_tasks = loaded.tasks.size();
  summary.n_records = run.records.size();
  summary.n_unresolved = run.unresolved.size();
  summary.backend_calls = backend->calls() - calls_before;
  if (!run.records.empty()) summary.report = summarize(run.records, config.threshold);
  return summary;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

std::vector<AblationRow> cmd_ablate(const RunConfig& config,
                                    const std::vector<FeatureSelection>& selections,
                                    JudgeBackend* backend) {
  if (selections.size() < 2) throw UsageError("ablation needs at least two feature selections");
  validate_config(config);
  std::unique_ptr<JudgeBackend> owned;
  if (!backend) {
    owned = make_backend(config);
    backend = owned.get();
  }

  std::vector<AblationRow> rows;
  std::map<std::string, int> dir_uses;
  for (const auto& selection : selections) {
    RunConfig sub = config;
    sub.selection = selection;
    const auto label = selection_label(selection);
    auto dir = sanitize(label);
    if (const int n = ++dir_uses[dir]; n > 1) dir += "_" + std::to_string(n);
    sub.out_dir = config.out_dir / dir;
    const auto summary = cmd_judge(sub, backend);
    if (!summary.report) throw DataError("no resolved records for selection " + label);
    rows.push_back(AblationRow{label, *summary.report, summary.n_unresolved});
  }

  std::string table =
      "selection,n_total,n_correct,accuracy,high_n,high_correct,high_accuracy,low_n,"
      "low_correct,low_accuracy,unresolved\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    table += csv(row.selection) + "," + std::to_string(r.n_total) + "," +
             std::to_string(r.n_correct) + "," + fixed(r.accuracy) + ",";
    if (r.high && r.low) {
      table += std::to_string(r.high->n) + "," + std::to_string(r.high->n_correct) + "," +
               fixed(r.high->accuracy()) + "," + std::to_string(r.low->n) + "," +
               std::to_string(r.low->n_correct) + "," + fixed(r.low->accuracy()) + ",";
    } else {
      table += ",,,,,,";
    }
    table += std::to_string(row.n_unresolved) + "\n";
  }
  fs::create_directories(config.out_dir);
  write_file_atomic(config.out_dir / "ablation.csv", table);

  const auto without = std::find_if(rows.begin(), rows.end(), [](const AblationRow& r) {
    return r.selection == selection_label(FeatureSelection::no_persona());
  });
  if (without != rows.end()) {
    std::string effect = "selection,accuracy_with_persona,accuracy_without_persona,delta\n";
    for (const auto& row : rows) {
      if (&row == &*without) continue;
      effect += csv(row.selection) + "," + fixed(row.report.accuracy) + "," +
                fixed(without->report.accuracy) + "," +
                fixed(row.report.accuracy - without->report.accuracy) + "\n";
    }
    write_file_atomic(config.out_dir / "persona_effect.csv", effect);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

namespace {

struct LoadedRun {
  fs::path dir;
  std::vector<EvalRecord> records;
  std::size_t unresolved = 0;
  int threshold = kDefaultCertaintyThreshold;
};

LoadedRun load_run(const fs::path& dir) {
  LoadedRun run;
  run.dir = dir;
  const auto records_path = dir / "records.jsonl";
  require_existing_file(records_path, "run records");
  run.records = read_records(records_path);
  if (run.records.empty()) throw DataError("run " + dir.string() + " has no resolved records");
  if (fs::is_regular_file(dir / "config.json")) {
    try {
      const auto config = json::parse(read_file(dir / "config.json"));
      run.threshold = config.value("threshold", kDefaultCertaintyThreshold);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed " + (dir / "config.json").string() + ": " + e.what());
    }
  }
  if (fs::is_regular_file(dir / "unresolved.jsonl")) {
    std::ifstream in(dir / "unresolved.jsonl");
    run.unresolved = read_jsonl(in).size();
  }
  return run;
}

using RowKey = std::tuple<std::string, JudgeMode, std::string>;  // model, mode, selection

json histogram_json(const AgreementReport& r, const CertaintyHistogram& h) {
  json bins = json::array();
  for (const auto& b : h.bins) {
    const auto acc = b.accuracy();
    bins.push_back(json{{"lo", b.lo},
                        {"hi", b.hi},
                        {"n_correct", b.n_correct},
                        {"n_wrong", b.n_wrong},
                        {"accuracy", acc ? json(*acc) : json(nullptr)}});
  }
  return json{{"dataset", to_string(r.dataset_tag)},
              {"model", r.model_id},
              {"mode", to_string(r.mode)},
              {"selection", r.selection},
              {"lo", h.lo},
              {"hi", h.hi},
              {"bin_width", h.bin_width},
              {"total", h.total()},
              {"bins", bins}};
}

}  // namespace

ReportBundle cmd_report(const ReportOptions& options) {
  if (options.run_dirs.empty()) throw UsageError("report needs at least one run directory");
  if (options.out_dir.empty()) throw UsageError("--out is required");

  std::vector<LoadedRun> runs;
  for (const auto& dir : options.run_dirs) runs.push_back(load_run(dir));

  if (options.threshold) {
    for (auto& run : runs) run.threshold = *options.threshold;
  } else if (!options.force) {
    std::set<int> thresholds;
    for (const auto& run : runs) thresholds.insert(run.threshold);
    if (thresholds.size() > 1) {
      throw UsageError(
          "runs use different certainty thresholds; pass --threshold or --force");
    }
  }

  struct Entry {
    AgreementReport report;
    std::vector<EvalRecord> records;
    std::size_t unresolved;
  };
  std::vector<Entry> entries;
  for (auto& run : runs) {
    entries.push_back(Entry{summarize(run.records, run.threshold), std::move(run.records),
                            run.unresolved});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return std::tie(x.report.dataset_tag, x.report.model_id, x.report.mode, x.report.selection) <
           std::tie(y.report.dataset_tag, y.report.model_id, y.report.mode, y.report.selection);
  });

  // Grid cells keyed by row then dataset.
  std::map<RowKey, std::map<DatasetTag, const AgreementReport*>> grid;
  std::set<DatasetTag> datasets;
  std::set<JudgeMode> modes;
  for (const auto& e : entries) {
    const RowKey key{e.report.model_id, e.report.mode, e.report.selection};
    auto& cell = grid[key][e.report.dataset_tag];
    if (cell) {
      throw UsageError("two runs share dataset " + std::string(to_string(e.report.dataset_tag)) +
                       ", model " + e.report.model_id + ", mode " +
                       std::string(to_string(e.report.mode)) + " and selection " +
                       e.report.selection);
    }
    cell = &e.report;
    datasets.insert(e.report.dataset_tag);
    modes.insert(e.report.mode);
  }

  fs::create_directories(options.out_dir);
  ReportBundle bundle;
  auto emit = [&](const fs::path& rel, const std::string& content) {
    const auto path = options.out_dir / rel;
    write_file_atomic(path, content);
    bundle.files.push_back(path);
  };

  // (a) agreement grid
  std::string grid_csv = "model,mode,selection";
  for (auto d : datasets) grid_csv += "," + std::string(to_string(d));
  grid_csv += ",Average\n";
  for (auto mode : modes) {
    grid_csv += "random," + std::string(to_string(mode)) + ",";
    for (std::size_t i = 0; i < datasets.size(); ++i) grid_csv += "," + fixed(baseline(mode), 3);
    grid_csv += "," + fixed(baseline(mode), 3) + "\n";
  }
  std::vector<std::pair<RowKey, double>> averages;
  for (const auto& [key, cells] : grid) {
    const auto& [model, mode, selection] = key;
    grid_csv += csv(model) + "," + std::string(to_string(mode)) + "," + csv(selection);
    std::vector<double> values;
    for (auto d : datasets) {
      grid_csv += ",";
      if (const auto it = cells.find(d); it != cells.end()) {
        grid_csv += fixed(it->second->accuracy, 3);
        values.push_back(it->second->accuracy);
      }
    }
    const double average = unweighted_average(values);
    averages.emplace_back(key, average);
    grid_csv += "," + fixed(average, 3) + "\n";
  }
  emit("agreement_grid.csv", grid_csv);

  // (b) certainty split
  std::string split_csv =
      "dataset,model,mode,selection,threshold,high,low,high_n,high_correct,low_n,low_correct\n";
  for (const auto& e : entries) {
    const auto& r = e.report;
    if (!r.high || !r.low) continue;
    split_csv += std::string(to_string(r.dataset_tag)) + "," + csv(r.model_id) + "," +
                 std::string(to_string(r.mode)) + "," + csv(r.selection) + "," +
                 std::to_string(r.threshold) + "," + format_cell(r.high->n_correct, r.high->n) +
                 "," + format_cell(r.low->n_correct, r.low->n) + "," +
                 std::to_string(r.high->n) + "," + std::to_string(r.high->n_correct) + "," +
                 std::to_string(r.low->n) + "," + std::to_string(r.low->n_correct) + "\n";
  }
  emit("certainty_split.csv", split_csv);

  // (c) histograms
  for (const auto& e : entries) {
    if (!e.report.high) continue;
    const auto h = clamp_and_bin(e.records);
    const auto name = sanitize(std::string(to_string(e.report.dataset_tag)) + "__" +
                               e.report.model_id + "__" + std::string(to_string(e.report.mode)) +
                               "__" + e.report.selection) +
                      ".json";
    emit(fs::path("histograms") / name, histogram_json(e.report, h).dump(2) + "\n");
  }

  // (d) summary
  std::ostringstream md;
  md << "# Judge agreement report\n\n";
  md << "| dataset | model | mode | selection | agreement | chance | n | unresolved |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& e : entries) {
    const auto& r = e.report;
    md << "| " << to_string(r.dataset_tag) << " | " << r.model_id << " | " << to_string(r.mode)
       << " | " << r.selection << " | " << format_cell(r.n_correct, r.n_total) << " | "
       << fixed(baseline(r.mode), 3) << " | " << r.n_total << " | " << e.unresolved << " |\n";
  }
  md << "\nUnweighted average across datasets:\n\n";
  for (const auto& [key, average] : averages) {
    md << "- " << std::get<0>(key) << ", " << to_string(std::get<1>(key)) << ", "
       << std::get<2>(key) << ": " << fixed(average, 3) << "\n";
  }
  bool any_split = false;
  for (const auto& e : entries) any_split = any_split || e.report.high.has_value();
  if (any_split) {
    md << "\n## Certainty split\n\n";
    md << "| dataset | model | selection | threshold | high | low |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& e : entries) {
      const auto& r = e.report;
      if (!r.high || !r.low) continue;
      md << "| " << to_string(r.dataset_tag) << " | " << r.model_id << " | " << r.selection
         << " | >= " << r.threshold << " | " << format_cell(r.high->n_correct, r.high->n)
         << " | " << format_cell(r.low->n_correct, r.low->n) << " |\n";
    }
  }
  emit("summary.md", md.str());

  for (auto& e : entries) bundle.runs.push_back(std::move(e.report));
  return bundle;
}

}  // namespace pjudge
