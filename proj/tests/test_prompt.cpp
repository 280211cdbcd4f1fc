#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "pjudge/json_io.h"
#include "pjudge/prompt.h"

namespace pjudge {
namespace {

namespace fs = std::filesystem;

const fs::path kGoldenDir = fs::path(PJUDGE_TEST_DATA_DIR) / "golden";

constexpr std::string_view kPersona = "Age: 45-50\nSex: Female\nReligion: Buddhist";
constexpr std::string_view kQuestion = "What should I cook tonight?";
constexpr std::string_view kAnswerA = "A miso soup with tofu.";
constexpr std::string_view kAnswerB = "A grilled steak.";

// Set PJUDGE_UPDATE_GOLDEN=1 to rewrite the files after an intended change.
void check_golden(const std::string& name, const std::string& actual) {
  const auto path = kGoldenDir / name;
  if (std::getenv("PJUDGE_UPDATE_GOLDEN")) write_file_atomic(path, actual);
  ASSERT_TRUE(fs::exists(path)) << path;
  EXPECT_EQ(actual, read_file(path)) << name;
}

TEST(Prompt, GoldenPerMode) {
  check_golden("prompt_no_tie_plain.txt",
               build_prompt(kQuestion, kAnswerA, kAnswerB, JudgeMode::NoTiePlain, kPersona));
  check_golden("prompt_no_tie_certainty.txt",
               build_prompt(kQuestion, kAnswerA, kAnswerB, JudgeMode::NoTieCertainty, kPersona));
  check_golden("prompt_with_tie.txt",
               build_prompt(kQuestion, kAnswerA, kAnswerB, JudgeMode::WithTie, kPersona));
}

TEST(Prompt, ModeFeatures) {
  const auto plain = build_prompt(kQuestion, kAnswerA, kAnswerB, JudgeMode::NoTiePlain, kPersona);
  const auto cert =
      build_prompt(kQuestion, kAnswerA, kAnswerB, JudgeMode::NoTieCertainty, kPersona);
  const auto tie = build_prompt(kQuestion, kAnswerA, kAnswerB, JudgeMode::WithTie, kPersona);
  for (const auto* p : {&plain, &cert, &tie}) {
    EXPECT_TRUE(p->ends_with("[Answer]\n[["));
    EXPECT_NE(p->find(std::string(prompt_markers::kProfile) + std::string(kPersona)),
              std::string::npos);
    EXPECT_LT(p->find(kAnswerA), p->find(kAnswerB));
  }
  EXPECT_NE(cert.find(kCertaintyRequestMarker), std::string::npos);
  EXPECT_EQ(plain.find(kCertaintyRequestMarker), std::string::npos);
  EXPECT_EQ(tie.find(kCertaintyRequestMarker), std::string::npos);
  EXPECT_NE(tie.find(prompt_markers::kTieOption), std::string::npos);
  EXPECT_EQ(cert.find(prompt_markers::kTieOption), std::string::npos);
  for (auto line : certainty_rubric()) EXPECT_NE(cert.find(line), std::string::npos);
}

TEST(Prompt, RubricBands) {
  const auto& rubric = certainty_rubric();
  EXPECT_TRUE(rubric[0].starts_with("1--20 (Uncertain)"));
  EXPECT_TRUE(rubric[3].starts_with("61--80 (Confident)"));
  EXPECT_TRUE(rubric[4].starts_with("81--100 (Highly Confident)"));
}

}  // namespace
}  // namespace pjudge
