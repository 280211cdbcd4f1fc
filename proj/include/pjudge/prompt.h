#pragma once

#include <array>
#include <string>
#include <string_view>

#include "pjudge/core.h"

namespace pjudge {

/// The five certainty guideline lines, shared by the judge prompt and the
/// human annotation payload.
const std::array<std::string_view, 5>& certainty_rubric();

/// Marker sentence present only in prompts that request a certainty.
inline constexpr std::string_view kCertaintyRequestMarker =
    "Use the following guidelines to assign the certainty level:";

/// Fills the judge template for `mode`. Responses are taken in presentation
/// order. The result always ends with "[Answer]\n[[".
std::string build_prompt(std::string_view question, std::string_view response_a,
                         std::string_view response_b, JudgeMode mode,
                         std::string_view persona_text);

inline std::string build_prompt(const JudgeTask& task, JudgeMode mode,
                                std::string_view persona_text) {
  return build_prompt(task.question, task.response_a, task.response_b, mode, persona_text);
}

/// Section delimiters, exposed for mocks that read prompts back.
namespace prompt_markers {
inline constexpr std::string_view kProfile = "[User Profile]\n";
inline constexpr std::string_view kQuestion = "\n\n[User Question]\n";
inline constexpr std::string_view kStartA = "[The Start of Assistant A's Answer]\n";
inline constexpr std::string_view kEndA = "\n[The End of Assistant A's Answer]";
inline constexpr std::string_view kStartB = "[The Start of Assistant B's Answer]\n";
inline constexpr std::string_view kEndB = "\n[The End of Assistant B's Answer]";
inline constexpr std::string_view kTieOption = "or \"[[C]]\" for a tie";
}  // namespace prompt_markers

}  // namespace pjudge
