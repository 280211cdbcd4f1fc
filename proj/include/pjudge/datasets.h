#pragma once

// Adapters from the four dataset layouts to canonical JudgeTask lists.
// The accepted input layouts are documented in docs/dataset_layouts.md.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pjudge/core.h"
#include "pjudge/refusal.h"

namespace pjudge {

/// What a loader considered, dropped, and skipped. Drop reasons are keys such
/// as "judge_generated", "refusal", "tie".
struct LoadReport {
  std::size_t considered = 0;
  std::map<std::string, std::size_t> dropped;
  std::vector<std::string> notes;
};

struct LoadResult {
  std::vector<JudgeTask> tasks;
  LoadReport report;
};

// ---------------------------------------------------------------------------
// PRISM
// ---------------------------------------------------------------------------

struct RawPreferencePair {
  std::string id;
  int turn = 0;
  std::string question;
  std::string response_a;
  std::string response_b;
  double score_a = 0;
  double score_b = 0;
  std::string generator_a;
  std::string generator_b;
  Persona persona;
};

/// Tie when |score_a - score_b| <= threshold, else the higher-scored side.
Choice tie_label_prism(double score_a, double score_b, double threshold = 10.0);

struct PrismOptions {
  std::size_t limit = 1000;
  /// Pairs with a response produced by any of these generators are dropped.
  std::vector<std::string> judge_model_ids;
  bool include_ties = false;
  double tie_threshold = 10.0;
  const RefusalDetector* refusal = nullptr;  // nullptr: shipped phrase list
};

LoadResult load_prism(std::istream& in, const PrismOptions& options);
LoadResult load_prism(const std::filesystem::path& path, const PrismOptions& options);

// ---------------------------------------------------------------------------
// OpinionQA
// ---------------------------------------------------------------------------

struct OpinionQaOptions {
  std::size_t questions_per_topic = 1;
  std::size_t respondents_per_question = 200;
  std::uint64_t seed = 0;
};

LoadResult load_opinionqa(std::istream& in, const OpinionQaOptions& options);
LoadResult load_opinionqa(const std::filesystem::path& path, const OpinionQaOptions& options);

// ---------------------------------------------------------------------------
// Empathic conversations (EC)
// ---------------------------------------------------------------------------

/// Tie when the empathy gap or the distress gap is below threshold; otherwise
/// the higher-empathy side.
Choice tie_label_ec(double empathy_a, double empathy_b, double distress_a, double distress_b,
                    double threshold = 2.0);

struct TieRatioPlan {
  std::size_t ties = 0;
  std::size_t non_ties = 0;

  double ratio() const {
    const auto total = ties + non_ties;
    return total == 0 ? 0.0 : static_cast<double>(ties) / static_cast<double>(total);
  }
};

/// How many ties and non-ties to keep so the tie fraction is `target` within
/// `tolerance` and the total is `n`. With n == 0 every non-tie is kept and the
/// tie count is solved from the ratio. Throws DataError when unachievable.
TieRatioPlan plan_tie_ratio(std::size_t ties_available, std::size_t non_ties_available,
                            std::size_t n, double target, double tolerance = 0.01);

struct EcOptions {
  std::size_t n = 500;  // 0: as many as the pool allows
  double tie_threshold = 2.0;
  double tie_ratio_target = 0.20;
  double tie_ratio_tolerance = 0.01;
  bool include_ties = false;
  std::uint64_t seed = 0;
};

LoadResult load_ec(std::istream& in, const EcOptions& options);
LoadResult load_ec(const std::filesystem::path& path, const EcOptions& options);

// ---------------------------------------------------------------------------
// Persona-response (PR) pairing
// ---------------------------------------------------------------------------

using EmbeddingVector = std::vector<float>;

/// Failure to embed one text. The caller decides whether to retry.
class EmbeddingError : public BackendError {
 public:
  using BackendError::BackendError;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Must be safe to call concurrently.
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Precomputed embeddings, one JSON object per line: {"text": ..., "vector": [...]}.
class FileEmbedder final : public Embedder {
 public:
  explicit FileEmbedder(const std::filesystem::path& path);
  explicit FileEmbedder(std::istream& in);

  EmbeddingVector embed(std::string_view text) override;
  std::size_t size() const { return table_.size(); }

 private:
  void load(std::istream& in);
  std::map<std::string, EmbeddingVector, std::less<>> table_;
};

/// Deterministic hashed bag-of-words vectors. Stand-in for offline demos; not
/// a semantic model.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 64) : dim_(dim) {}
  EmbeddingVector embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

struct PrTriple {
  std::string persona_id;
  Persona persona;
  std::string question_id;
  std::string question;
  std::string response;
};

std::vector<PrTriple> read_pr_triples(std::istream& in);
std::vector<PrTriple> read_pr_triples(const std::filesystem::path& path);

/// For each triple, pairs the target response with a response by the most
/// cosine-similar other persona to a different question. Ground truth is the
/// target-authored response (stored as A; presentation is shuffled later).
LoadResult pair_pr_tasks(const std::vector<PrTriple>& triples, Embedder& embedder,
                         std::size_t jobs = 1);

}  // namespace pjudge
