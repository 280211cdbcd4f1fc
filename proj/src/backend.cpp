#include "pjudge/backend.h"

#include <cstdio>
#include <fstream>

#include "pjudge/digest.h"
#include "pjudge/json_io.h"
#include "pjudge/prompt.h"
#include "pjudge/random.h"
#include "pjudge/verdict.h"

namespace pjudge {

namespace fs = std::filesystem;

std::string ReplayBackend::complete(const std::string&, const GenerationParams& params) {
  count_call();
  throw BackendError("replay backend: no cached completion for model '" + params.model_id + "'");
}

// ---------------------------------------------------------------------------
// Prompt sections
// ---------------------------------------------------------------------------

namespace prompt_view {

namespace {

std::string_view between(std::string_view text, std::string_view start, std::string_view end) {
  const auto s = text.find(start);
  if (s == std::string_view::npos) return {};
  const auto from = s + start.size();
  const auto e = text.find(end, from);
  if (e == std::string_view::npos) return {};
  return text.substr(from, e - from);
}

}  // namespace

std::optional<std::string> profile_value(std::string_view prompt, std::string_view field) {
  auto block = between(prompt, prompt_markers::kProfile, prompt_markers::kQuestion);
  while (!block.empty()) {
    const auto nl = block.find('\n');
    const auto line = block.substr(0, nl);
    if (line.size() > field.size() + 2 && line.starts_with(field) &&
        line.substr(field.size(), 2) == ": ") {
      return std::string(line.substr(field.size() + 2));
    }
    if (nl == std::string_view::npos) break;
    block.remove_prefix(nl + 1);
  }
  return std::nullopt;
}

std::string_view answer_a(std::string_view prompt) {
  return between(prompt, prompt_markers::kStartA, prompt_markers::kEndA);
}

std::string_view answer_b(std::string_view prompt) {
  return between(prompt, prompt_markers::kStartB, prompt_markers::kEndB);
}

bool requests_certainty(std::string_view prompt) {
  return prompt.find(kCertaintyRequestMarker) != std::string_view::npos;
}

bool offers_tie(std::string_view prompt) {
  return prompt.find(prompt_markers::kTieOption) != std::string_view::npos;
}

}  // namespace prompt_view

// ---------------------------------------------------------------------------
// ScriptedBackend
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& s : v) out.push_back(s.get<std::string>());
  } else {
    throw UsageError(std::string("mock rule: '") + key + "' must be a string or list");
  }
  return out;
}

Choice rule_choice(const std::string& text) {
  if (text == "A") return Choice::A;
  if (text == "B") return Choice::B;
  if (text == "C" || text == "Tie") return Choice::Tie;
  throw UsageError("mock rule: unknown choice '" + text + "'");
}

}  // namespace

ScriptedBackend::ScriptedBackend(nlohmann::json rules) {
  const auto& list = rules.is_object() && rules.contains("rules") ? rules.at("rules") : rules;
  if (!list.is_array() || list.empty()) {
    throw UsageError("mock rules must be a non-empty array (or {\"rules\": [...]})");
  }
  for (const auto& r : list) {
    Rule rule;
    rule.contains = string_list(r, "when_contains");
    rule.not_contains = string_list(r, "when_not_contains");
    int actions = 0;
    if (r.contains("completion")) {
      rule.completion = r.at("completion").get<std::string>();
      ++actions;
    }
    if (r.contains("completions")) {
      rule.completions = string_list(r, "completions");
      if (rule.completions.empty()) throw UsageError("mock rule: empty 'completions'");
      ++actions;
    }
    if (r.contains("choice")) {
      rule.choice = rule_choice(r.at("choice").get<std::string>());
      ++actions;
    }
    if (r.contains("pick_by_profile_field")) {
      rule.profile_field = r.at("pick_by_profile_field").get<std::string>();
      ++actions;
    }
    if (r.value("random_choice", false)) {
      rule.random = true;
      ++actions;
    }
    if (actions != 1) throw UsageError("mock rule must have exactly one action");
    if (r.contains("fallback_choice")) {
      rule.fallback_choice = rule_choice(r.at("fallback_choice").get<std::string>());
    }
    rule.seed = r.value("seed", std::uint64_t{0});
    rule.certainty = r.value("certainty", 50);
    rule.fallback_certainty = r.value("fallback_certainty", rule.certainty);
    rule.explanation = r.value("explanation", std::string{});
    rules_.push_back(std::move(rule));
  }
}

ScriptedBackend ScriptedBackend::from_file(const fs::path& path) {
  try {
    return ScriptedBackend(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("mock rules file " + path.string() + ": " + e.what());
  }
}

nlohmann::json ScriptedBackend::default_rules() {
  return nlohmann::json::parse(R"({"rules": [
    {"when_contains": "Religion: ", "pick_by_profile_field": "Religion",
     "certainty": 90, "fallback_certainty": 40},
    {"choice": "A", "certainty": 30}
  ]})");
}

std::string ScriptedBackend::respond(std::size_t rule_index, const Rule& rule,
                                     const std::string& prompt) {
  if (rule.completion) return *rule.completion;
  if (!rule.completions.empty()) {
    std::size_t served;
    {
      std::lock_guard lock(mutex_);
      served = served_[{rule_index, fnv1a64(prompt)}]++;
    }
    return rule.completions[std::min(served, rule.completions.size() - 1)];
  }

  Choice choice = rule.fallback_choice;
  int certainty = rule.certainty;
  if (rule.choice) {
    choice = *rule.choice;
  } else if (rule.profile_field) {
    certainty = rule.fallback_certainty;
    if (const auto value = prompt_view::profile_value(prompt, *rule.profile_field)) {
      const bool in_a = prompt_view::answer_a(prompt).find(*value) != std::string_view::npos;
      const bool in_b = prompt_view::answer_b(prompt).find(*value) != std::string_view::npos;
      if (in_a != in_b) {
        choice = in_a ? Choice::A : Choice::B;
        certainty = rule.certainty;
      }
    }
  } else if (rule.random) {
    Rng rng(derive_seed(rule.seed, prompt));
    const auto options = prompt_view::offers_tie(prompt) ? 3u : 2u;
    choice = static_cast<Choice>(rng.below(options));
  }
  if (choice == Choice::Tie && !prompt_view::offers_tie(prompt)) choice = rule.fallback_choice;
  std::optional<int> c;
  if (prompt_view::requests_certainty(prompt)) c = certainty;
  return format_completion(choice, c, rule.explanation);
}

std::string ScriptedBackend::complete(const std::string& prompt, const GenerationParams&) {
  count_call();
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    bool match = true;
    for (const auto& s : rule.contains) match = match && prompt.find(s) != std::string::npos;
    for (const auto& s : rule.not_contains) match = match && prompt.find(s) == std::string::npos;
    if (match) return respond(i, rule, prompt);
  }
  throw BackendError("mock backend: no rule matches the prompt");
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

CacheKey CacheKey::make(const GenerationParams& params, std::string_view prompt,
                        int attempt_index) {
  char temperature[40];
  char top_p[40];
  std::snprintf(temperature, sizeof temperature, "%.17g", params.temperature);
  std::snprintf(top_p, sizeof top_p, "%.17g", params.top_p);
  const json material = json::array(
      {params.model_id, std::string(prompt), temperature, top_p, attempt_index});
  return CacheKey{sha256_hex(material.dump())};
}

DirectoryCache::DirectoryCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

fs::path DirectoryCache::path_for(const CacheKey& key) const {
  return dir_ / key.hex.substr(0, 2) / (key.hex + ".txt");
}

std::optional<std::string> DirectoryCache::get(const CacheKey& key) {
  const auto path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return read_file(path);
}

void DirectoryCache::put(const CacheKey& key, std::string_view completion) {
  write_file_atomic(path_for(key), completion);
}

std::size_t DirectoryCache::size() const {
  std::size_t n = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") ++n;
  }
  return n;
}

std::optional<std::string> MemoryCache::get(const CacheKey& key) {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void MemoryCache::put(const CacheKey& key, std::string_view completion) {
  std::lock_guard lock(mutex_);
  entries_[key] = std::string(completion);
}

std::size_t MemoryCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace pjudge
