#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pjudge/core.h"

namespace pjudge {

struct GenerationParams {
  std::string model_id;
  double temperature = 0.7;
  double top_p = 0.95;
  int max_output_tokens = 512;
};

/// complete() must be safe to call concurrently.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string complete(const std::string& prompt, const GenerationParams& params) = 0;

  std::uint64_t calls() const { return calls_.load(); }

 protected:
  void count_call() { calls_.fetch_add(1); }

 private:
  std::atomic<std::uint64_t> calls_{0};
};

/// Wraps a callable; handy for tests and simulations.
class FunctionBackend final : public JudgeBackend {
 public:
  using Fn = std::function<std::string(const std::string& prompt, const GenerationParams&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const std::string& prompt, const GenerationParams& params) override {
    count_call();
    return fn_(prompt, params);
  }

 private:
  Fn fn_;
};

/// Serves nothing: every call is a cache miss and throws BackendError. Pair
/// with a response cache to replay a completed run.
class ReplayBackend final : public JudgeBackend {
 public:
  std::string complete(const std::string& prompt, const GenerationParams& params) override;
};

/// Deterministic mock driven by a rules file. See docs/mock_rules.md.
///
/// Rules are tried in order; the first whose predicates all hold produces the
/// completion. Predicates: "when_contains" (string or list, all must occur),
/// "when_not_contains". Actions, exactly one per rule:
///   "completion": fixed text
///   "completions": list served in order per distinct prompt (last repeats)
///   "choice": "A" | "B" | "C"
///   "pick_by_profile_field": name -> picks the answer containing that profile
///       value, if exactly one does; otherwise "fallback_choice" (default A)
///   "random_choice": true -> uniform over A/B (and C when the prompt offers
///       a tie), seeded by "seed" and the prompt text
/// Choice-producing actions append " [[certainty]]" when the prompt asks for a
/// certainty ("certainty", default 50; "fallback_certainty" for fallbacks).
class ScriptedBackend final : public JudgeBackend {
 public:
  explicit ScriptedBackend(nlohmann::json rules);
  static ScriptedBackend from_file(const std::filesystem::path& path);
  /// Rules used when no rules file is given: pick by Religion, else "A".
  static nlohmann::json default_rules();

  std::string complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  struct Rule {
    std::vector<std::string> contains;
    std::vector<std::string> not_contains;
    std::optional<std::string> completion;
    std::vector<std::string> completions;
    std::optional<Choice> choice;
    std::optional<std::string> profile_field;
    Choice fallback_choice = Choice::A;
    bool random = false;
    std::uint64_t seed = 0;
    int certainty = 50;
    int fallback_certainty = 50;
    std::string explanation;
  };

  std::string respond(std::size_t rule_index, const Rule& rule, const std::string& prompt);

  std::vector<Rule> rules_;
  std::mutex mutex_;
  std::map<std::pair<std::size_t, std::uint64_t>, std::size_t> served_;
};

/// Helpers for reading the sections of a judge prompt back out.
namespace prompt_view {
std::optional<std::string> profile_value(std::string_view prompt, std::string_view field);
std::string_view answer_a(std::string_view prompt);
std::string_view answer_b(std::string_view prompt);
bool requests_certainty(std::string_view prompt);
bool offers_tie(std::string_view prompt);
}  // namespace prompt_view

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

/// SHA-256 over (model_id, prompt, temperature, top_p, attempt_index).
struct CacheKey {
  std::string hex;

  static CacheKey make(const GenerationParams& params, std::string_view prompt,
                       int attempt_index);
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
  friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

class ResponseCache {
 public:
  virtual ~ResponseCache() = default;
  virtual std::optional<std::string> get(const CacheKey& key) = 0;
  /// Atomic per key: concurrent readers see either nothing or the full value.
  virtual void put(const CacheKey& key, std::string_view completion) = 0;
};

/// Content-addressed files: <dir>/<hex[0:2]>/<hex>.txt
class DirectoryCache final : public ResponseCache {
 public:
  explicit DirectoryCache(std::filesystem::path dir);
  std::optional<std::string> get(const CacheKey& key) override;
  void put(const CacheKey& key, std::string_view completion) override;
  std::filesystem::path path_for(const CacheKey& key) const;
  std::size_t size() const;

 private:
  std::filesystem::path dir_;
};

class MemoryCache final : public ResponseCache {
 public:
  std::optional<std::string> get(const CacheKey& key) override;
  void put(const CacheKey& key, std::string_view completion) override;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<CacheKey, std::string> entries_;
};

}  // namespace pjudge
