#pragma once

// Shared domain types for the personalized-judge harness.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pjudge {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto its exit codes.
// ---------------------------------------------------------------------------

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. Carries the offending record index
/// when one applies.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(index ? what + " (record " + std::to_string(*index) + ")" : what),
        index_(index) {}

  std::optional<std::size_t> index() const { return index_; }

 private:
  std::optional<std::size_t> index_;
};

/// Transport, credential, or replay-cache failures talking to a judge backend.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class DatasetTag { PRISM, OpinionQA, EC, PR };
enum class Choice { A, B, Tie };
enum class JudgeMode { NoTiePlain, NoTieCertainty, WithTie };

enum class CertaintyBand {
  Uncertain,            // 1-20
  ModeratelyConfident,  // 21-40
  QuiteConfident,       // 41-60
  Confident,            // 61-80
  HighlyConfident,      // 81-100
};

std::string_view to_string(DatasetTag tag);
std::string_view to_string(Choice choice);
std::string_view to_string(JudgeMode mode);
std::string_view to_string(CertaintyBand band);

// Parsers accept the canonical spelling case-insensitively; the mode parser
// also accepts the CLI spellings (no-tie-plain, no-tie-certainty, with-tie).
DatasetTag parse_dataset_tag(std::string_view text);
Choice parse_choice(std::string_view text);
JudgeMode parse_mode(std::string_view text);

/// Whether ground-truth ties exist for this dataset.
bool dataset_has_tie_rule(DatasetTag tag);

bool mode_requests_certainty(JudgeMode mode);
bool mode_allows_tie(JudgeMode mode);

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

struct Attribute {
  std::string name;
  std::string value;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// Ordered attribute/value pairs for one user. Construct through
/// make_persona() to get schema validation and schema ordering.
struct Persona {
  DatasetTag dataset_tag = DatasetTag::PRISM;
  std::vector<Attribute> attributes;

  const std::string* find(std::string_view name) const;

  friend bool operator==(const Persona&, const Persona&) = default;
};

struct JudgeTask {
  std::string id;
  DatasetTag dataset_tag = DatasetTag::PRISM;
  std::string question;
  std::string response_a;
  std::string response_b;
  Persona persona;
  Choice ground_truth = Choice::A;
  std::map<std::string, std::string> meta;

  friend bool operator==(const JudgeTask&, const JudgeTask&) = default;
};

struct Verdict {
  Choice choice = Choice::A;
  std::optional<int> certainty;
  std::string raw;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Outcome of judging one task, in canonical (stored) orientation.
/// dataset_tag and ground_truth are carried so that correctness and every
/// report number can be re-derived from record files alone.
struct EvalRecord {
  std::string task_id;
  DatasetTag dataset_tag = DatasetTag::PRISM;
  std::string model_id;
  JudgeMode mode = JudgeMode::NoTieCertainty;
  std::string selection = "All";
  bool flipped = false;
  Verdict verdict;
  Choice ground_truth = Choice::A;
  bool correct = false;
  int attempts = 1;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

inline constexpr int kMinCertainty = 1;
inline constexpr int kMaxCertainty = 100;
inline constexpr int kMaxAttempts = 5;

// ---------------------------------------------------------------------------
// Orientation and banding
// ---------------------------------------------------------------------------

/// Maps a choice between presented and stored orientation. A and B swap when
/// flipped; Tie is orientation-free. Involutive for a fixed flag.
constexpr Choice canonical_orientation(Choice choice, bool flipped) {
  if (!flipped || choice == Choice::Tie) return choice;
  return choice == Choice::A ? Choice::B : Choice::A;
}

/// Throws std::out_of_range outside [1, 100].
CertaintyBand band_of(int certainty);

/// Inclusive [lo, hi] range of a band.
std::pair<int, int> band_range(CertaintyBand band);

/// correct <=> choice == ground truth.
constexpr bool is_correct(Choice choice, Choice ground_truth) { return choice == ground_truth; }

/// Throws DataError when the task breaks a JudgeTask invariant.
void validate_task(const JudgeTask& task);

}  // namespace pjudge
