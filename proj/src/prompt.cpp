#include "pjudge/prompt.h"

namespace pjudge {

namespace {

constexpr std::string_view kInstructionNoTie =
    "Given the user profile provided below, select the response from AI assistant A or B "
    "that the user would most likely prefer. Declare your choice by using the format: "
    "\"[[A]]\" if you believe assistant A's response is more suitable, or \"[[B]]\" if "
    "assistant B's response is better suited.";

constexpr std::string_view kInstructionTie =
    "Given the user profile provided below, select the response from AI assistant A or B "
    "that the user would most likely prefer. Declare your choice by using the format: "
    "\"[[A]]\" if you believe assistant A's response is more suitable, \"[[B]]\" if "
    "assistant B's response is better suited, or \"[[C]]\" for a tie.";

constexpr std::string_view kCertaintyRequest =
    " Additionally, assess your confidence in this decision by assigning a certainty level "
    "from 1 to 100. Use the following guidelines to assign the certainty level:";

constexpr std::string_view kCertaintyEnclose =
    "Ensure you enclose your chosen certainty level in double brackets, like so: [[X]].";

constexpr std::array<std::string_view, 5> kRubric = {
    "1--20 (Uncertain): The user profile provides insufficient or minimal evidence. The "
    "decision is largely based on weak or indirect hints.",
    "21--40 (Moderately Confident): There is noticeable evidence supporting a preference, "
    "though it is not comprehensive, and other interpretations are possible.",
    "41--60 (Quite Confident): You find clear and convincing evidence that supports your "
    "prediction, though it is not entirely decisive.",
    "61--80 (Confident): The user profile contains strong evidence that clearly supports your "
    "prediction, with very little ambiguity.",
    "81--100 (Highly Confident): The user profile provides direct and explicit evidence that "
    "decisively supports your prediction.",
};

}  // namespace

const std::array<std::string_view, 5>& certainty_rubric() { return kRubric; }

std::string build_prompt(std::string_view question, std::string_view response_a,
                         std::string_view response_b, JudgeMode mode,
                         std::string_view persona_text) {
  namespace m = prompt_markers;
  std::string out;
  out.reserve(2048 + question.size() + response_a.size() + response_b.size() +
              persona_text.size());

  if (mode == JudgeMode::WithTie) {
    out += kInstructionTie;
    out += "\n\n";
  } else if (mode == JudgeMode::NoTieCertainty) {
    out += kInstructionNoTie;
    out += kCertaintyRequest;
    out += "\n\n";
    for (auto line : kRubric) {
      out += line;
      out += "\n\n";
    }
    out += kCertaintyEnclose;
    out += "\n\n";
  } else {
    out += kInstructionNoTie;
    out += "\n\n";
  }

  out += m::kProfile;
  out += persona_text;
  out += m::kQuestion;
  out += question;
  out += "\n\n";
  out += m::kStartA;
  out += response_a;
  out += m::kEndA;
  out += "\n\n";
  out += m::kStartB;
  out += response_b;
  out += m::kEndB;
  out += "\n\n[Answer]\n[[";
  return out;
}

}  // namespace pjudge
