#include <gtest/gtest.h>

#include <stdexcept>

#include "pjudge/core.h"
#include "pjudge/persona.h"

namespace pjudge {
namespace {

constexpr Choice kChoices[] = {Choice::A, Choice::B, Choice::Tie};

TEST(CanonicalOrientation, Examples) {
  EXPECT_EQ(canonical_orientation(Choice::A, true), Choice::B);
  EXPECT_EQ(canonical_orientation(Choice::Tie, true), Choice::Tie);
  EXPECT_EQ(canonical_orientation(Choice::B, false), Choice::B);
  EXPECT_EQ(canonical_orientation(Choice::B, true), Choice::A);
}

TEST(CanonicalOrientation, Involutive) {
  for (auto c : kChoices) {
    for (bool f : {false, true}) {
      EXPECT_EQ(canonical_orientation(canonical_orientation(c, f), f), c);
    }
  }
}

TEST(CertaintyBand, Examples) {
  EXPECT_EQ(band_of(15), CertaintyBand::Uncertain);
  EXPECT_EQ(band_of(80), CertaintyBand::Confident);
  EXPECT_EQ(band_of(81), CertaintyBand::HighlyConfident);
}

TEST(CertaintyBand, PartitionIsExhaustiveAndDisjoint) {
  const CertaintyBand bands[] = {CertaintyBand::Uncertain, CertaintyBand::ModeratelyConfident,
                                 CertaintyBand::QuiteConfident, CertaintyBand::Confident,
                                 CertaintyBand::HighlyConfident};
  for (int c = kMinCertainty; c <= kMaxCertainty; ++c) {
    int containing = 0;
    for (auto b : bands) {
      const auto [lo, hi] = band_range(b);
      if (lo <= c && c <= hi) {
        ++containing;
        EXPECT_EQ(band_of(c), b) << c;
      }
    }
    EXPECT_EQ(containing, 1) << c;
  }
}

TEST(CertaintyBand, RejectsOutOfRange) {
  EXPECT_THROW(band_of(0), std::out_of_range);
  EXPECT_THROW(band_of(101), std::out_of_range);
  EXPECT_THROW(band_of(-5), std::out_of_range);
}

TEST(Enums, StringRoundTrip) {
  for (auto t : {DatasetTag::PRISM, DatasetTag::OpinionQA, DatasetTag::EC, DatasetTag::PR}) {
    EXPECT_EQ(parse_dataset_tag(to_string(t)), t);
  }
  for (auto c : kChoices) EXPECT_EQ(parse_choice(to_string(c)), c);
  for (auto m : {JudgeMode::NoTiePlain, JudgeMode::NoTieCertainty, JudgeMode::WithTie}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_EQ(parse_mode("with-tie"), JudgeMode::WithTie);
  EXPECT_EQ(parse_mode("no-tie-plain"), JudgeMode::NoTiePlain);
  EXPECT_EQ(parse_dataset_tag("opinionqa"), DatasetTag::OpinionQA);
  EXPECT_THROW(parse_dataset_tag("imdb"), UsageError);
}

TEST(Modes, CertaintyAndTieFlags) {
  EXPECT_TRUE(mode_requests_certainty(JudgeMode::NoTieCertainty));
  EXPECT_FALSE(mode_requests_certainty(JudgeMode::NoTiePlain));
  EXPECT_FALSE(mode_requests_certainty(JudgeMode::WithTie));
  EXPECT_TRUE(mode_allows_tie(JudgeMode::WithTie));
  EXPECT_FALSE(mode_allows_tie(JudgeMode::NoTieCertainty));
}

TEST(Correctness, PureFunctionOfChoiceAndTruth) {
  for (auto c : kChoices) {
    for (auto g : kChoices) EXPECT_EQ(is_correct(c, g), c == g);
  }
}

JudgeTask sample_task() {
  JudgeTask t;
  t.id = "t1";
  t.dataset_tag = DatasetTag::PRISM;
  t.question = "q";
  t.response_a = "one";
  t.response_b = "two";
  t.persona = make_persona(DatasetTag::PRISM, {{"Age", "30"}});
  return t;
}

TEST(ValidateTask, AcceptsWellFormed) { EXPECT_NO_THROW(validate_task(sample_task())); }

TEST(ValidateTask, RejectsBrokenInvariants) {
  auto t = sample_task();
  t.response_b = t.response_a;
  EXPECT_THROW(validate_task(t), DataError);

  t = sample_task();
  t.response_a.clear();
  EXPECT_THROW(validate_task(t), DataError);

  t = sample_task();
  t.dataset_tag = DatasetTag::OpinionQA;
  t.persona = make_persona(DatasetTag::OpinionQA, {{"Age", "30"}});
  t.ground_truth = Choice::Tie;
  EXPECT_THROW(validate_task(t), DataError);

  t = sample_task();
  t.ground_truth = Choice::Tie;  // PRISM has a tie rule
  EXPECT_NO_THROW(validate_task(t));
}

TEST(DataError, CarriesIndex) {
  const DataError e("bad", 7);
  EXPECT_EQ(e.index(), 7u);
  EXPECT_NE(std::string(e.what()).find("record 7"), std::string::npos);
}

}  // namespace
}  // namespace pjudge
