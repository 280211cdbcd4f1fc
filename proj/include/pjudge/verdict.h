#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "pjudge/core.h"
#include "pjudge/refusal.h"

namespace pjudge {

/// Why a completion could not be turned into a verdict. All kinds are
/// retryable by regenerating.
enum class ParseErrorKind { NoChoice, TieNotAllowed, CertaintyMissing, CertaintyOutOfRange, Refusal };

std::string_view to_string(ParseErrorKind kind);

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::NoChoice;
  std::string detail;
};

class VerdictError : public std::runtime_error {
 public:
  explicit VerdictError(ParseError error)
      : std::runtime_error(std::string(to_string(error.kind)) + ": " + error.detail),
        error_(std::move(error)) {}
  ParseErrorKind kind() const { return error_.kind; }
  const ParseError& error() const { return error_; }

 private:
  ParseError error_;
};

using ParseOutcome = std::variant<Verdict, ParseError>;

/// Verdict grammar for completions of "[["-terminated prompts:
///  - leading whitespace and '[' are dropped and "[[" is prepended, so both
///    "A]] ..." and "[[A]] ..." parse;
///  - the first [[X]] with X in {A, B} (and C in WithTie) is the choice;
///  - in NoTieCertainty the next bracketed integer [[n]] is the certainty,
///    which must lie in [1, 100];
///  - completions the refusal detector matches are rejected as Refusal.
/// Verdict::raw holds the completion exactly as received.
ParseOutcome try_parse_verdict(std::string_view completion, JudgeMode mode,
                               const RefusalDetector* refusal = nullptr);

/// Throwing form of try_parse_verdict.
Verdict parse_verdict(std::string_view completion, JudgeMode mode,
                      const RefusalDetector* refusal = nullptr);

/// Completion text in the judge's expected format, e.g. "A]] [[85]]".
/// Used by mocks; the inverse of parse_verdict for well-formed input.
std::string format_completion(Choice choice, std::optional<int> certainty,
                              std::string_view explanation = {});

}  // namespace pjudge
