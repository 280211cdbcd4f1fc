#include "pjudge/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pjudge/random.h"

namespace pjudge {

namespace {

double ratio(std::size_t a, std::size_t b) {
  return static_cast<double>(a) / static_cast<double>(b);
}

int require_certainty(const EvalRecord& r) {
  if (!r.verdict.certainty) {
    throw DataError("record '" + r.task_id + "' has no certainty");
  }
  return *r.verdict.certainty;
}

}  // namespace

double agreement(std::span<const EvalRecord> records) {
  if (records.empty()) throw DataError("agreement of an empty record set is undefined");
  return stratum_of(records).accuracy().value();
}

std::optional<double> Stratum::accuracy() const {
  if (n == 0) return std::nullopt;
  return ratio(n_correct, n);
}

Stratum stratum_of(std::span<const EvalRecord> records) {
  Stratum s;
  s.n = records.size();
  for (const auto& r : records) s.n_correct += r.correct ? 1 : 0;
  return s;
}

CertaintySplit certainty_split(std::span<const EvalRecord> records, int threshold) {
  CertaintySplit split;
  for (const auto& r : records) {
    (require_certainty(r) >= threshold ? split.high : split.low).push_back(r);
  }
  return split;
}

std::optional<double> HistogramBin::accuracy() const {
  const auto n = n_correct + n_wrong;
  if (n == 0) return std::nullopt;
  return ratio(n_correct, n);
}

std::size_t CertaintyHistogram::total() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.n_correct + b.n_wrong;
  return n;
}

CertaintyHistogram clamp_and_bin(std::span<const EvalRecord> records, int lo, int hi,
                                 int bin_width) {
  if (lo > hi || bin_width <= 0) throw UsageError("histogram needs lo <= hi and bin_width > 0");
  CertaintyHistogram h{lo, hi, bin_width, {}};
  const int n_bins = std::max(1, (hi - lo + bin_width - 1) / bin_width);
  for (int i = 0; i < n_bins; ++i) {
    h.bins.push_back(HistogramBin{lo + i * bin_width, std::min(hi, lo + (i + 1) * bin_width)});
  }
  for (const auto& r : records) {
    const int c = clamp_certainty(require_certainty(r), lo, hi);
    const int index = std::min(n_bins - 1, (c - lo) / bin_width);
    auto& bin = h.bins[static_cast<std::size_t>(index)];
    (r.correct ? bin.n_correct : bin.n_wrong) += 1;
  }
  return h;
}

double unweighted_average(std::span<const double> values) {
  if (values.empty()) throw DataError("average of an empty list is undefined");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double baseline(JudgeMode mode) { return mode_allows_tie(mode) ? 1.0 / 3.0 : 0.5; }

AgreementReport summarize(std::span<const EvalRecord> records, int threshold) {
  if (records.empty()) throw DataError("cannot summarize an empty run");
  const auto& first = records.front();
  AgreementReport report;
  report.dataset_tag = first.dataset_tag;
  report.model_id = first.model_id;
  report.mode = first.mode;
  report.selection = first.selection;
  report.threshold = threshold;
  bool all_certain = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.dataset_tag != first.dataset_tag || r.model_id != first.model_id ||
        r.mode != first.mode || r.selection != first.selection) {
      throw DataError("records from different runs cannot be summarized together", i);
    }
    all_certain = all_certain && r.verdict.certainty.has_value();
  }
  const auto s = stratum_of(records);
  report.n_total = s.n;
  report.n_correct = s.n_correct;
  report.accuracy = *s.accuracy();
  if (all_certain) {
    const auto split = certainty_split(records, threshold);
    report.high = stratum_of(split.high);
    report.low = stratum_of(split.low);
  }
  return report;
}

std::string format_cell(std::size_t n_correct, std::size_t n_total) {
  std::array<char, 64> buf{};
  if (n_total == 0) {
    std::snprintf(buf.data(), buf.size(), "n/a (%zu/%zu)", n_correct, n_total);
  } else {
    std::snprintf(buf.data(), buf.size(), "%.3f (%zu/%zu)", ratio(n_correct, n_total), n_correct,
                  n_total);
  }
  return buf.data();
}

bool ratio_consistent(double printed, std::size_t n_correct, std::size_t n_total) {
  if (n_total == 0) return false;
  // Compare in thousandths so the check is about the printed digits.
  const auto exact = std::llround(ratio(n_correct, n_total) * 1000.0);
  return exact == std::llround(printed * 1000.0);
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

MajorityOutcome majority_vote(std::span<const AnnotationRecord> annotations) {
  if (annotations.size() < 2) throw DataError("majority vote needs at least two annotations");
  std::array<std::size_t, 3> votes{};
  std::array<long long, 3> certainty_sum{};
  for (const auto& a : annotations) {
    if (a.task_id != annotations.front().task_id) {
      throw DataError("majority vote over annotations of different tasks");
    }
    const auto c = static_cast<std::size_t>(a.choice);
    ++votes[c];
    certainty_sum[c] += a.certainty;
  }
  for (std::size_t c = 0; c < votes.size(); ++c) {
    if (2 * votes[c] > annotations.size()) {
      const auto k = static_cast<long long>(votes[c]);
      // Half-up rounding of sum / k for positive sums.
      const auto mean = (2 * certainty_sum[c] + k) / (2 * k);
      return Verdict{static_cast<Choice>(c), static_cast<int>(mean), {}};
    }
  }
  return NoMajority{annotations.size()};
}

std::map<std::string, std::vector<AnnotationRecord>> group_by_task(
    std::span<const AnnotationRecord> annotations) {
  std::map<std::string, std::vector<AnnotationRecord>> groups;
  for (const auto& a : annotations) groups[a.task_id].push_back(a);
  return groups;
}

std::optional<double> MajoritySummary::accuracy() const {
  const auto decided = n_tasks - n_no_majority;
  if (decided == 0) return std::nullopt;
  return ratio(n_correct, decided);
}

MajoritySummary majority_vote_accuracy(std::span<const AnnotationRecord> annotations,
                                       const std::map<std::string, Choice>& ground_truth) {
  MajoritySummary summary;
  for (const auto& [task_id, group] : group_by_task(annotations)) {
    const auto truth = ground_truth.find(task_id);
    if (truth == ground_truth.end()) throw DataError("no ground truth for task '" + task_id + "'");
    ++summary.n_tasks;
    const auto outcome = majority_vote(group);
    if (const auto* verdict = std::get_if<Verdict>(&outcome)) {
      summary.n_correct += is_correct(verdict->choice, truth->second) ? 1 : 0;
    } else {
      ++summary.n_no_majority;
    }
  }
  return summary;
}

double pairwise_agreement(std::span<const AnnotationRecord> task_annotations) {
  const auto k = task_annotations.size();
  if (k < 2) throw DataError("pairwise agreement needs at least two annotations");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      agree += task_annotations[i].choice == task_annotations[j].choice ? 1 : 0;
    }
  }
  return ratio(agree, k * (k - 1) / 2);
}

BootstrapResult bootstrap_pairwise_agreement(std::span<const AnnotationRecord> annotations,
                                             std::size_t resamples, std::size_t sample_size,
                                             std::uint64_t seed) {
  if (resamples == 0 || sample_size == 0) {
    throw UsageError("bootstrap needs resamples > 0 and sample_size > 0");
  }
  std::vector<double> per_task;
  for (const auto& [task_id, group] : group_by_task(annotations)) {
    if (group.size() < 2) {
      throw DataError("task '" + task_id + "' has fewer than two annotations");
    }
    per_task.push_back(pairwise_agreement(group));
  }
  if (sample_size > per_task.size()) {
    throw DataError("bootstrap sample size " + std::to_string(sample_size) +
                    " exceeds the " + std::to_string(per_task.size()) + " annotated tasks");
  }

  std::vector<double> stats(resamples);
  std::vector<std::size_t> index(per_task.size());
  for (std::size_t r = 0; r < resamples; ++r) {
    std::iota(index.begin(), index.end(), std::size_t{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    // Partial Fisher-Yates: the first sample_size slots are the draw.
    double sum = 0;
    for (std::size_t i = 0; i < sample_size; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(index.size() - i));
      std::swap(index[i], index[j]);
      sum += per_task[index[i]];
    }
    stats[r] = sum / static_cast<double>(sample_size);
  }

  BootstrapResult result;
  result.mean = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(resamples);
  double ss = 0;
  for (double s : stats) ss += (s - result.mean) * (s - result.mean);
  result.std = std::sqrt(ss / static_cast<double>(resamples));
  return result;
}

}  // namespace pjudge
