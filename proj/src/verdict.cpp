#include "pjudge/verdict.h"

#include <cctype>
#include <optional>
#include <vector>

namespace pjudge {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Contents of every [[...]] token, in order.
std::vector<std::string_view> bracket_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("[[", pos);
    if (open == std::string_view::npos) break;
    // "[[[x]]" opens at the innermost pair.
    std::size_t start = open + 2;
    while (start < text.size() && text[start] == '[') ++start;
    const auto close = text.find("]]", start);
    if (close == std::string_view::npos) break;
    tokens.push_back(trim(text.substr(start, close - start)));
    pos = close + 2;
  }
  return tokens;
}

enum class IntToken { NotInteger, InRange, OutOfRange };

IntToken classify_integer(std::string_view token, int& value) {
  std::string_view digits = token;
  bool negative = false;
  if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) {
    negative = digits.front() == '-';
    digits.remove_prefix(1);
  }
  if (digits.empty() || digits.size() > 9) {
    if (digits.size() > 9 &&
        digits.find_first_not_of("0123456789") == std::string_view::npos) {
      return IntToken::OutOfRange;
    }
    return IntToken::NotInteger;
  }
  int v = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return IntToken::NotInteger;
    v = v * 10 + (c - '0');
  }
  value = negative ? -v : v;
  return value >= kMinCertainty && value <= kMaxCertainty ? IntToken::InRange
                                                          : IntToken::OutOfRange;
}

std::optional<Choice> choice_token(std::string_view token) {
  if (token == "A") return Choice::A;
  if (token == "B") return Choice::B;
  if (token == "C") return Choice::Tie;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::NoChoice: return "NoChoice";
    case ParseErrorKind::TieNotAllowed: return "TieNotAllowed";
    case ParseErrorKind::CertaintyMissing: return "CertaintyMissing";
    case ParseErrorKind::CertaintyOutOfRange: return "CertaintyOutOfRange";
    case ParseErrorKind::Refusal: return "Refusal";
  }
  return "?";
}

ParseOutcome try_parse_verdict(std::string_view completion, JudgeMode mode,
                               const RefusalDetector* refusal) {
  const bool refused = refusal ? refusal->is_refusal(completion) : detect_refusal(completion);
  if (refused) return ParseError{ParseErrorKind::Refusal, "completion declines to answer"};

  std::string_view body = completion;
  while (!body.empty() && (std::isspace(static_cast<unsigned char>(body.front())) ||
                           body.front() == '[')) {
    body.remove_prefix(1);
  }
  std::string normalized = "[[";
  normalized += body;

  const auto tokens = bracket_tokens(normalized);
  std::size_t choice_at = tokens.size();
  std::optional<Choice> choice;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if ((choice = choice_token(tokens[i]))) {
      choice_at = i;
      break;
    }
  }
  if (!choice) return ParseError{ParseErrorKind::NoChoice, "no [[A]]/[[B]] token"};
  if (*choice == Choice::Tie && !mode_allows_tie(mode)) {
    return ParseError{ParseErrorKind::TieNotAllowed, "[[C]] outside the tie setting"};
  }

  Verdict verdict{*choice, std::nullopt, std::string(completion)};
  if (mode_requests_certainty(mode)) {
    for (std::size_t i = choice_at + 1; i < tokens.size(); ++i) {
      int value = 0;
      switch (classify_integer(tokens[i], value)) {
        case IntToken::NotInteger:
          continue;
        case IntToken::OutOfRange:
          return ParseError{ParseErrorKind::CertaintyOutOfRange,
                            "certainty [[" + std::string(tokens[i]) + "]] outside 1-100"};
        case IntToken::InRange:
          verdict.certainty = value;
          return verdict;
      }
    }
    return ParseError{ParseErrorKind::CertaintyMissing, "no bracketed integer certainty"};
  }
  return verdict;
}

Verdict parse_verdict(std::string_view completion, JudgeMode mode,
                      const RefusalDetector* refusal) {
  auto outcome = try_parse_verdict(completion, mode, refusal);
  if (auto* error = std::get_if<ParseError>(&outcome)) throw VerdictError(std::move(*error));
  return std::get<Verdict>(std::move(outcome));
}

std::string format_completion(Choice choice, std::optional<int> certainty,
                              std::string_view explanation) {
  std::string out = choice == Choice::Tie ? "C" : std::string(to_string(choice));
  out += "]]";
  if (!explanation.empty()) {
    out += ' ';
    out += explanation;
  }
  if (certainty) out += " [[" + std::to_string(*certainty) + "]]";
  return out;
}

}  // namespace pjudge
