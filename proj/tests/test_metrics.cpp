#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pjudge/metrics.h"
#include "pjudge/random.h"

namespace pjudge {
namespace {

EvalRecord record(bool correct, std::optional<int> certainty = std::nullopt,
                  const std::string& id = "t") {
  EvalRecord r;
  r.task_id = id;
  r.model_id = "m";
  r.ground_truth = Choice::A;
  r.verdict.choice = correct ? Choice::A : Choice::B;
  r.verdict.certainty = certainty;
  r.correct = correct;
  return r;
}

TEST(Agreement, Examples) {
  const std::vector<EvalRecord> three_of_four = {record(true), record(true), record(true),
                                                 record(false)};
  EXPECT_DOUBLE_EQ(agreement(three_of_four), 0.75);
  const std::vector<EvalRecord> all = {record(true), record(true)};
  EXPECT_DOUBLE_EQ(agreement(all), 1.0);
  EXPECT_THROW(agreement(std::vector<EvalRecord>{}), DataError);
}

TEST(Agreement, UniformRandomJudgeNearBaseline) {
  Rng rng(2024);
  std::vector<EvalRecord> records;
  for (int i = 0; i < 10000; ++i) {
    const auto truth = static_cast<Choice>(i % 2);
    const auto guess = static_cast<Choice>(rng.below(2));
    EvalRecord r = record(guess == truth);
    records.push_back(r);
  }
  EXPECT_NEAR(agreement(records), 0.5, 0.015);
}

TEST(CertaintySplit, BoundaryAndVacuousThreshold) {
  const std::vector<EvalRecord> rs = {record(true, 79), record(true, 80), record(false, 81)};
  const auto split = certainty_split(rs, 80);
  ASSERT_EQ(split.high.size(), 2u);
  EXPECT_EQ(split.high[0].verdict.certainty, 80);
  EXPECT_EQ(split.high[1].verdict.certainty, 81);
  ASSERT_EQ(split.low.size(), 1u);
  EXPECT_EQ(split.low[0].verdict.certainty, 79);

  const auto none_high = certainty_split(rs, 101);
  EXPECT_TRUE(none_high.high.empty());
  EXPECT_EQ(none_high.low.size(), 3u);

  const std::vector<EvalRecord> missing = {record(true)};
  EXPECT_THROW(certainty_split(missing), DataError);
}

// High set: 50 records at certainty >= 80, 45 correct. Low set: 50 below,
// 30 correct.
std::vector<EvalRecord> constructed_split() {
  std::vector<EvalRecord> rs;
  for (int i = 0; i < 50; ++i) rs.push_back(record(i < 45, 80 + i % 21));
  for (int i = 0; i < 50; ++i) rs.push_back(record(i < 30, 1 + i));
  return rs;
}

TEST(CertaintySplit, RecoversConstructedAccuracies) {
  const auto rs = constructed_split();
  const auto split = certainty_split(rs, 80);
  EXPECT_EQ(stratum_of(split.high).accuracy(), 0.9);
  EXPECT_EQ(stratum_of(split.low).accuracy(), 0.6);
}

// The overall accuracy is the size-weighted mean of the strata, at every
// threshold, for random record sets.
TEST(CertaintySplit, WeightedMeanProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EvalRecord> rs;
    const auto n = 1 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) {
      rs.push_back(record(rng.bernoulli(0.6), 1 + static_cast<int>(rng.below(100))));
    }
    const int threshold = 1 + static_cast<int>(rng.below(101));
    const auto split = certainty_split(rs, threshold);
    EXPECT_EQ(split.high.size() + split.low.size(), rs.size());
    const auto high = stratum_of(split.high);
    const auto low = stratum_of(split.low);
    const double weighted =
        (high.accuracy().value_or(0) * high.n + low.accuracy().value_or(0) * low.n) / rs.size();
    EXPECT_NEAR(weighted, agreement(rs), 1e-12);
  }
}

TEST(Stratum, EmptyHasNoAccuracy) {
  EXPECT_FALSE(stratum_of(std::vector<EvalRecord>{}).accuracy().has_value());
}

TEST(Histogram, ClampExamples) {
  static_assert(clamp_certainty(95) == 90);
  static_assert(clamp_certainty(10) == 40);
  static_assert(clamp_certainty(55) == 55);
}

TEST(Histogram, SingleBinAccuracy) {
  std::vector<EvalRecord> rs;
  for (int i = 0; i < 100; ++i) rs.push_back(record(i < 70, 85));
  const auto h = clamp_and_bin(rs);
  ASSERT_EQ(h.bins.size(), 5u);
  EXPECT_EQ(h.bins[4].lo, 80);
  EXPECT_EQ(h.bins[4].hi, 90);
  EXPECT_EQ(h.bins[4].accuracy(), 0.7);
  for (int b = 0; b < 4; ++b) EXPECT_FALSE(h.bins[b].accuracy().has_value());
}

TEST(Histogram, BinEdges) {
  const std::vector<EvalRecord> rs = {record(true, 1),  record(true, 40), record(true, 49),
                                      record(true, 50), record(true, 89), record(true, 90),
                                      record(true, 100)};
  const auto h = clamp_and_bin(rs);
  std::vector<std::size_t> counts;
  for (const auto& b : h.bins) counts.push_back(b.n_correct + b.n_wrong);
  EXPECT_EQ(counts, (std::vector<std::size_t>{3, 1, 0, 0, 3}));
}

TEST(Histogram, ConservesTotals) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvalRecord> rs;
    std::size_t correct = 0;
    const auto n = rng.below(200);
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = rng.bernoulli(0.5);
      correct += ok;
      rs.push_back(record(ok, 1 + static_cast<int>(rng.below(100))));
    }
    const auto h = clamp_and_bin(rs);
    EXPECT_EQ(h.total(), n);
    std::size_t hc = 0;
    for (const auto& b : h.bins) hc += b.n_correct;
    EXPECT_EQ(hc, correct);
  }
}

TEST(Average, Examples) {
  const std::vector<double> gpt4 = {0.946, 0.728, 0.635, 0.591};
  EXPECT_NEAR(unweighted_average(gpt4), 0.725, 5e-4);
  const std::vector<double> one = {0.3};
  EXPECT_DOUBLE_EQ(unweighted_average(one), 0.3);
  const std::vector<double> sym = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(unweighted_average(sym), 0.5);
  EXPECT_THROW(unweighted_average(std::vector<double>{}), DataError);
}

TEST(Baseline, PerMode) {
  EXPECT_DOUBLE_EQ(baseline(JudgeMode::NoTieCertainty), 0.5);
  EXPECT_DOUBLE_EQ(baseline(JudgeMode::NoTiePlain), 0.5);
  EXPECT_NEAR(baseline(JudgeMode::WithTie), 0.3333, 1e-4);
}

TEST(Summarize, StrataOnlyWithCertainty) {
  const auto rs = constructed_split();
  const auto report = summarize(rs, 80);
  EXPECT_EQ(report.n_total, 100u);
  EXPECT_EQ(report.n_correct, 75u);
  ASSERT_TRUE(report.high && report.low);
  EXPECT_EQ(report.high->n, 50u);
  EXPECT_EQ(report.low->n_correct, 30u);

  const std::vector<EvalRecord> plain = {record(true), record(false)};
  EXPECT_FALSE(summarize(plain).high.has_value());

  auto mixed = plain;
  mixed[1].model_id = "other";
  EXPECT_THROW(summarize(mixed), DataError);
}

TEST(FormatCell, Examples) {
  EXPECT_EQ(format_cell(150, 200), "0.750 (150/200)");
  EXPECT_EQ(format_cell(0, 0), "n/a (0/0)");
  EXPECT_EQ(format_cell(2, 3), "0.667 (2/3)");
  EXPECT_TRUE(ratio_consistent(0.750, 150, 200));
  EXPECT_FALSE(ratio_consistent(0.751, 150, 200));
}

// ---------------------------------------------------------------------------
// Majority vote
// ---------------------------------------------------------------------------

AnnotationRecord ann(const std::string& task, const std::string& who, Choice c, int certainty) {
  return AnnotationRecord{task, who, c, certainty, 0};
}

TEST(MajorityVote, Examples) {
  const std::vector<AnnotationRecord> aab = {ann("t", "1", Choice::A, 80), ann("t", "2", Choice::A, 60),
                                             ann("t", "3", Choice::B, 90)};
  const auto v = std::get<Verdict>(majority_vote(aab));
  EXPECT_EQ(v.choice, Choice::A);
  EXPECT_EQ(v.certainty, 70);

  const std::vector<AnnotationRecord> ab = {ann("t", "1", Choice::A, 80), ann("t", "2", Choice::B, 60)};
  EXPECT_TRUE(std::holds_alternative<NoMajority>(majority_vote(ab)));

  EXPECT_THROW(majority_vote(std::vector<AnnotationRecord>{ann("t", "1", Choice::A, 1)}), DataError);
  const std::vector<AnnotationRecord> mixed = {ann("t", "1", Choice::A, 80), ann("u", "2", Choice::A, 60)};
  EXPECT_THROW(majority_vote(mixed), DataError);
}

// Independent oracle: count votes, find a choice held by more than half,
// average the certainties of its voters in floating point, round half up.
std::optional<std::pair<Choice, int>> oracle_majority(const std::vector<AnnotationRecord>& as) {
  for (auto c : {Choice::A, Choice::B, Choice::Tie}) {
    double sum = 0;
    int votes = 0;
    for (const auto& a : as) {
      if (a.choice == c) {
        sum += a.certainty;
        ++votes;
      }
    }
    if (votes * 2 > static_cast<int>(as.size())) {
      return std::pair{c, static_cast<int>(std::floor(sum / votes + 0.5))};
    }
  }
  return std::nullopt;
}

// Frozen oracle output over ordered triples (index 9a + 3b + c over A, B, C);
// '-' marks no majority.
constexpr std::string_view kTripleTable = "AAAAB-A-C" "AB-BBB-BC" "A-C-BCCCC";

TEST(MajorityVote, AllTwentySevenTriples) {
  const Choice choices[] = {Choice::A, Choice::B, Choice::Tie};
  const int certainties[] = {80, 61, 90};
  std::string table;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        const std::vector<AnnotationRecord> triple = {
            ann("t", "x", choices[a], certainties[0]), ann("t", "y", choices[b], certainties[1]),
            ann("t", "z", choices[c], certainties[2])};
        const auto expected = oracle_majority(triple);
        const auto actual = majority_vote(triple);
        if (expected) {
          ASSERT_TRUE(std::holds_alternative<Verdict>(actual));
          EXPECT_EQ(std::get<Verdict>(actual).choice, expected->first);
          EXPECT_EQ(std::get<Verdict>(actual).certainty, expected->second);
          table += "ABC"[static_cast<int>(expected->first)];
        } else {
          EXPECT_TRUE(std::holds_alternative<NoMajority>(actual));
          table += '-';
        }
      }
    }
  }
  EXPECT_EQ(table, kTripleTable);
}

TEST(MajorityVote, HalfUpRounding) {
  const std::vector<AnnotationRecord> as = {ann("t", "1", Choice::B, 70), ann("t", "2", Choice::B, 71),
                                            ann("t", "3", Choice::A, 5)};
  EXPECT_EQ(std::get<Verdict>(majority_vote(as)).certainty, 71);
}

TEST(MajorityVoteAccuracy, CountsNoMajoritySeparately) {
  const std::vector<AnnotationRecord> as = {
      ann("t1", "1", Choice::A, 50), ann("t1", "2", Choice::A, 50), ann("t1", "3", Choice::B, 50),
      ann("t2", "1", Choice::B, 50), ann("t2", "2", Choice::B, 50), ann("t2", "3", Choice::B, 50),
      ann("t3", "1", Choice::A, 50), ann("t3", "2", Choice::B, 50)};
  const auto s = majority_vote_accuracy(as, {{"t1", Choice::A}, {"t2", Choice::A}, {"t3", Choice::A}});
  EXPECT_EQ(s.n_tasks, 3u);
  EXPECT_EQ(s.n_no_majority, 1u);
  EXPECT_EQ(s.n_correct, 1u);
  EXPECT_EQ(s.accuracy(), 0.5);
  EXPECT_THROW(majority_vote_accuracy(as, {{"t1", Choice::A}}), DataError);
}

// ---------------------------------------------------------------------------
// Pairwise agreement and bootstrap
// ---------------------------------------------------------------------------

TEST(PairwiseAgreement, Examples) {
  const std::vector<AnnotationRecord> aab = {ann("t", "1", Choice::A, 1), ann("t", "2", Choice::A, 1),
                                             ann("t", "3", Choice::B, 1)};
  EXPECT_NEAR(pairwise_agreement(aab), 1.0 / 3.0, 1e-12);
  const std::vector<AnnotationRecord> ab = {ann("t", "1", Choice::A, 1), ann("t", "2", Choice::B, 1)};
  EXPECT_DOUBLE_EQ(pairwise_agreement(ab), 0.0);
}

TEST(Bootstrap, UnanimousAnnotators) {
  std::vector<AnnotationRecord> as;
  for (int t = 0; t < 40; ++t) {
    for (int k = 0; k < 3; ++k) as.push_back(ann("t" + std::to_string(t), std::to_string(k), Choice::B, 50));
  }
  const auto r = bootstrap_pairwise_agreement(as, 200, 30, 1);
  EXPECT_DOUBLE_EQ(r.mean, 1.0);
  EXPECT_DOUBLE_EQ(r.std, 0.0);
}

// Three annotators per task, each matching the truth with probability p so
// that two annotators agree with probability p^2 + (1-p)^2 = 0.6.
std::vector<AnnotationRecord> synthetic_annotations(std::size_t tasks, std::uint64_t seed) {
  const double p = (1.0 + std::sqrt(0.2)) / 2.0;
  Rng rng(seed);
  std::vector<AnnotationRecord> as;
  for (std::size_t t = 0; t < tasks; ++t) {
    const auto truth = static_cast<Choice>(rng.below(2));
    for (int k = 0; k < 3; ++k) {
      const bool agree = rng.bernoulli(p);
      const auto choice = agree ? truth : (truth == Choice::A ? Choice::B : Choice::A);
      as.push_back(ann("task" + std::to_string(t), "ann" + std::to_string(k), choice, 50));
    }
  }
  return as;
}

TEST(Bootstrap, MeanMatchesPopulationOracle) {
  const auto as = synthetic_annotations(300, 77);
  // Oracle: sampling tasks without replacement is unbiased for the population
  // mean of per-task agreement; its spread has the finite-population form.
  std::vector<double> per_task;
  for (const auto& [id, group] : group_by_task(as)) {
    int agree = 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) agree += group[i].choice == group[j].choice;
    }
    per_task.push_back(agree / 3.0);
  }
  const double N = static_cast<double>(per_task.size());
  const double mu = std::accumulate(per_task.begin(), per_task.end(), 0.0) / N;
  double var = 0;
  for (double x : per_task) var += (x - mu) * (x - mu);
  var /= N;
  const double expected_std = std::sqrt(var / 30.0 * (N - 30.0) / (N - 1.0));

  EXPECT_NEAR(mu, 0.6, 0.05);  // the generator hits its design target
  const auto r = bootstrap_pairwise_agreement(as, 1000, 30, 5);
  EXPECT_NEAR(r.mean, mu, 0.02);
  EXPECT_NEAR(r.std, expected_std, 0.2 * expected_std);
}

TEST(Bootstrap, DeterministicAndOrderFree) {
  auto as = synthetic_annotations(60, 3);
  const auto first = bootstrap_pairwise_agreement(as, 300, 20, 11);
  std::reverse(as.begin(), as.end());
  const auto second = bootstrap_pairwise_agreement(as, 300, 20, 11);
  EXPECT_EQ(first.mean, second.mean);
  EXPECT_EQ(first.std, second.std);
  EXPECT_THROW(bootstrap_pairwise_agreement(as, 10, 61, 0), DataError);
}

}  // namespace
}  // namespace pjudge
