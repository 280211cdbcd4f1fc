// pjudge: personalized LLM-judge evaluation harness CLI.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "pjudge/annotation.h"
#include "pjudge/annotation_server.h"
#include "pjudge/json_io.h"
#include "pjudge/report.h"
#include "pjudge/synthetic.h"

namespace fs = std::filesystem;
using namespace pjudge;

namespace {

struct RunFlags {
  std::string dataset;
  std::string source;
  std::string source_format = "native";
  std::string model = "mock";
  std::string backend = "mock";
  std::string mode = "no-tie-certainty";
  std::vector<std::string> features{"all"};
  int threshold = kDefaultCertaintyThreshold;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string cache_dir;
  std::string out;
  std::string rules;
  std::string embeddings;
  std::string refusal_phrases;
  int max_retries = kDefaultMaxRetries;
  double temperature = 0.7;
  double top_p = 0.95;
  int max_tokens = 512;
  std::size_t limit = 1000;
  std::size_t ec_n = 500;
  std::size_t respondents = 200;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool many_features) {
  cmd->add_option("--dataset", f.dataset, "PRISM, OpinionQA, EC or PR")->required();
  cmd->add_option("--source", f.source, "dataset file")->required();
  cmd->add_option("--source-format", f.source_format, "native or tasks (canonical JSONL)")
      ->capture_default_str();
  cmd->add_option("--model", f.model, "judge model id")->capture_default_str();
  cmd->add_option("--backend", f.backend, "remote, mock or replay")->capture_default_str();
  cmd->add_option("--mode", f.mode, "no-tie-plain, no-tie-certainty or with-tie")
      ->capture_default_str();
  if (many_features) {
    cmd->add_option("--features", f.features,
                    "feature selections: all, important-three, least-one, none, custom:A,B")
        ->required();
  } else {
    cmd->add_option("--features", f.features[0],
                    "all, important-three, least-one, none, or custom:A,B")
        ->capture_default_str();
  }
  cmd->add_option("--threshold", f.threshold, "high-certainty cut-off (>=)")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "seed for sampling and position shuffles")
      ->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "concurrent judge calls")->capture_default_str();
  cmd->add_option("--cache-dir", f.cache_dir, "response cache directory");
  cmd->add_option("--out", f.out, "output directory")->required();
  cmd->add_option("--rules", f.rules, "mock backend rules file");
  cmd->add_option("--embeddings", f.embeddings, "precomputed persona embeddings (PR)");
  cmd->add_option("--refusal-phrases", f.refusal_phrases, "refusal phrase list override");
  cmd->add_option("--max-retries", f.max_retries, "regenerations after the first attempt")
      ->capture_default_str();
  cmd->add_option("--temperature", f.temperature)->capture_default_str();
  cmd->add_option("--top-p", f.top_p)->capture_default_str();
  cmd->add_option("--max-tokens", f.max_tokens)->capture_default_str();
  cmd->add_option("--limit", f.limit, "PRISM: first-turn records considered")
      ->capture_default_str();
  cmd->add_option("--ec-n", f.ec_n, "EC: number of tasks (0 = as many as possible)")
      ->capture_default_str();
  cmd->add_option("--respondents", f.respondents, "OpinionQA: respondents per question")
      ->capture_default_str();
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

RunConfig to_config(const RunFlags& f) {
  RunConfig c;
  c.dataset_tag = parse_dataset_tag(f.dataset);
  c.source = f.source;
  c.source_format = parse_source_format(f.source_format);
  c.model_id = f.model;
  c.backend = parse_backend_kind(f.backend);
  c.mode = parse_mode(f.mode);
  c.selection = parse_selection(f.features.front());
  c.threshold = f.threshold;
  c.seed = f.seed;
  c.jobs = f.jobs;
  c.cache_dir = optional_path(f.cache_dir);
  c.out_dir = f.out;
  c.mock_rules = optional_path(f.rules);
  c.embeddings = optional_path(f.embeddings);
  c.refusal_phrases = optional_path(f.refusal_phrases);
  c.max_retries = f.max_retries;
  c.temperature = f.temperature;
  c.top_p = f.top_p;
  c.max_output_tokens = f.max_tokens;
  c.limit = f.limit;
  c.ec_n = f.ec_n;
  c.respondents_per_question = f.respondents;
  return c;
}

void print_summary(const RunSummary& s) {
  std::cout << "run: " << s.run_dir.string() << "\n"
            << "tasks: " << s.n_tasks << ", records: " << s.n_records
            << ", unresolved: " << s.n_unresolved << ", backend calls: " << s.backend_calls
            << "\n";
  if (s.report) {
    const auto& r = *s.report;
    std::cout << "agreement: " << format_cell(r.n_correct, r.n_total) << "\n";
    if (r.high && r.low) {
      std::cout << "certainty >= " << r.threshold << ": " << format_cell(r.high->n_correct, r.high->n)
                << ", below: " << format_cell(r.low->n_correct, r.low->n) << "\n";
    }
  }
}

int run_judge(const RunFlags& f) {
  print_summary(cmd_judge(to_config(f)));
  return kExitOk;
}

int run_ablate(const RunFlags& f) {
  std::vector<FeatureSelection> selections;
  for (const auto& s : f.features) selections.push_back(parse_selection(s));
  const auto rows = cmd_ablate(to_config(f), selections);
  std::cout << "selection,accuracy,high,low\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    std::cout << row.selection << "," << format_cell(r.n_correct, r.n_total);
    if (r.high && r.low) {
      std::cout << "," << format_cell(r.high->n_correct, r.high->n) << ","
                << format_cell(r.low->n_correct, r.low->n);
    }
    std::cout << "\n";
  }
  std::cout << "wrote " << (fs::path(f.out) / "ablation.csv").string() << "\n";
  return kExitOk;
}

struct ReportFlags {
  std::vector<std::string> runs;
  std::string out;
  std::optional<int> threshold;
  bool force = false;
};

int run_report(const ReportFlags& f) {
  ReportOptions o;
  for (const auto& r : f.runs) o.run_dirs.emplace_back(r);
  o.out_dir = f.out;
  o.threshold = f.threshold;
  o.force = f.force;
  const auto bundle = cmd_report(o);
  for (const auto& p : bundle.files) std::cout << "wrote " << p.string() << "\n";
  return kExitOk;
}

struct ServeFlags {
  std::string source;
  std::string store;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t annotators_per_task = 3;
  std::size_t tasks_per_annotator = 30;
  std::optional<std::size_t> max_annotators;
  std::uint64_t seed = 0;
  std::string tls_cert;
  std::string tls_key;
};

httplib::Server* g_server = nullptr;

extern "C" void stop_server(int) {
  if (g_server) g_server->stop();
}

int run_serve(const ServeFlags& f) {
  std::unique_ptr<AnnotationService> service;
  if (fs::exists(fs::path(f.store) / "log.jsonl")) {
    service = AnnotationService::open(f.store);
    std::cout << "resumed study in " << f.store << "\n";
  } else {
    if (f.source.empty()) throw UsageError("--source is required to create a new study");
    StudyConfig config;
    config.annotators_per_task = f.annotators_per_task;
    config.tasks_per_annotator = f.tasks_per_annotator;
    config.max_annotators = f.max_annotators;
    config.seed = f.seed;
    service = AnnotationService::create(f.store, read_tasks(fs::path(f.source)), config);
    std::cout << "created study in " << f.store << "\n";
  }
  const auto stats = service->stats();
  std::cout << stats.tasks << " tasks, " << stats.annotator_slots << " annotator slots\n";

  std::unique_ptr<httplib::Server> server;
  if (!f.tls_cert.empty() || !f.tls_key.empty()) {
    if (f.tls_cert.empty() || f.tls_key.empty()) {
      throw UsageError("--tls-cert and --tls-key go together");
    }
    auto tls = std::make_unique<httplib::SSLServer>(f.tls_cert.c_str(), f.tls_key.c_str());
    if (!tls->is_valid()) throw UsageError("could not load the TLS certificate or key");
    server = std::move(tls);
  } else {
    server = std::make_unique<httplib::Server>();
  }
  install_annotation_routes(*server, *service);
  g_server = server.get();
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cout << "listening on " << f.host << ":" << f.port << std::endl;
  if (!server->listen(f.host, f.port)) {
    throw BackendError("could not listen on " + f.host + ":" + std::to_string(f.port));
  }
  service->snapshot();
  g_server = nullptr;
  return kExitOk;
}

struct DemoFlags {
  std::string out = "pjudge-demo";
  std::size_t n = 200;
  std::size_t misleading = 50;
  std::uint64_t seed = 0;
  std::size_t jobs = 4;
};

int run_mock_demo(const DemoFlags& f) {
  const fs::path out = f.out;
  fs::create_directories(out);
  SyntheticOptions so;
  so.n = f.n;
  so.misleading = f.misleading;
  so.seed = f.seed;
  const auto tasks = synthetic_tasks(so);
  write_tasks(out / "tasks.jsonl", tasks);

  RunConfig c;
  c.dataset_tag = so.dataset_tag;
  c.source = out / "tasks.jsonl";
  c.source_format = SourceFormat::Tasks;
  c.model_id = "persona-oracle-mock";
  c.backend = BackendKind::Mock;
  c.mode = JudgeMode::NoTieCertainty;
  c.seed = f.seed;
  c.jobs = f.jobs;
  c.out_dir = out / "run";
  const auto summary = cmd_judge(c);
  print_summary(summary);

  ReportOptions ro;
  ro.run_dirs = {c.out_dir};
  ro.out_dir = out / "report";
  cmd_report(ro);
  std::cout << "report: " << ro.out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized LLM-judge evaluation harness"};
  app.require_subcommand(1);

  RunFlags judge_flags;
  auto* judge_cmd = app.add_subcommand("judge", "judge one dataset with one feature selection");
  add_run_flags(judge_cmd, judge_flags, false);

  RunFlags ablate_flags;
  auto* ablate_cmd = app.add_subcommand("ablate", "compare persona feature selections");
  add_run_flags(ablate_cmd, ablate_flags, true);

  ReportFlags report_flags;
  auto* report_cmd = app.add_subcommand("report", "build tables and histograms from runs");
  report_cmd->add_option("runs", report_flags.runs, "run directories")->required();
  report_cmd->add_option("--out", report_flags.out, "output directory")->required();
  report_cmd->add_option("--threshold", report_flags.threshold,
                         "certainty threshold for every run");
  report_cmd->add_flag("--force", report_flags.force, "accept runs with different thresholds");

  ServeFlags serve_flags;
  auto* serve_cmd = app.add_subcommand("serve", "run the human annotation service");
  serve_cmd->add_option("--source", serve_flags.source, "canonical task JSONL for a new study");
  serve_cmd->add_option("--store", serve_flags.store, "study directory (log and snapshots)")
      ->required();
  serve_cmd->add_option("--host", serve_flags.host)->capture_default_str();
  serve_cmd->add_option("--port", serve_flags.port)->capture_default_str();
  serve_cmd->add_option("--annotators-per-task", serve_flags.annotators_per_task)
      ->capture_default_str();
  serve_cmd->add_option("--tasks-per-annotator", serve_flags.tasks_per_annotator)
      ->capture_default_str();
  serve_cmd->add_option("--max-annotators", serve_flags.max_annotators);
  serve_cmd->add_option("--seed", serve_flags.seed)->capture_default_str();
  serve_cmd->add_option("--tls-cert", serve_flags.tls_cert, "PEM certificate for HTTPS");
  serve_cmd->add_option("--tls-key", serve_flags.tls_key, "PEM private key for HTTPS");

  DemoFlags demo_flags;
  auto* demo_cmd = app.add_subcommand("mock-demo", "synthetic end-to-end run on the mock judge");
  demo_cmd->add_option("--out", demo_flags.out)->capture_default_str();
  demo_cmd->add_option("--n", demo_flags.n, "number of tasks")->capture_default_str();
  demo_cmd->add_option("--misleading", demo_flags.misleading,
                       "tasks where the persona cue points at the wrong answer")
      ->capture_default_str();
  demo_cmd->add_option("--seed", demo_flags.seed)->capture_default_str();
  demo_cmd->add_option("--jobs", demo_flags.jobs)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*judge_cmd) return run_judge(judge_flags);
    if (*ablate_cmd) return run_ablate(ablate_flags);
    if (*report_cmd) return run_report(report_flags);
    if (*serve_cmd) return run_serve(serve_flags);
    if (*demo_cmd) return run_mock_demo(demo_flags);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
