#include <gtest/gtest.h>

#include "pjudge/refusal.h"

namespace pjudge {
namespace {

TEST(Refusal, ShippedList) {
  EXPECT_TRUE(detect_refusal("I'm sorry, but I can't help with that."));
  EXPECT_TRUE(detect_refusal("  i cannot provide medical advice"));
  EXPECT_TRUE(detect_refusal("I\xE2\x80\x99m sorry, but I can\xE2\x80\x99t do that"));
  EXPECT_TRUE(detect_refusal(""));
  EXPECT_TRUE(detect_refusal(" \n\t"));
  EXPECT_FALSE(detect_refusal("Paris is the capital of France."));
  // Only the opening counts.
  EXPECT_FALSE(detect_refusal("Sure. I'm sorry, but I can't stress this enough."));
}

TEST(Refusal, CustomPhrases) {
  const auto d = RefusalDetector::from_text("# comment\n\n  Nope\r\nno way\n");
  ASSERT_EQ(d.phrases().size(), 2u);
  EXPECT_TRUE(d.is_refusal("NOPE, not today"));
  EXPECT_TRUE(d.is_refusal("no way."));
  EXPECT_FALSE(d.is_refusal("I'm sorry, but I can't"));
}

}  // namespace
}  // namespace pjudge
