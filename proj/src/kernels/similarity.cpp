#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pjudge/kernels/similarity.h"

namespace pjudge::kernels {

namespace {

using DotFn = double (*)(const float*, const float*, std::size_t);

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  static const bool has = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return has;
#else
  return false;
#endif
}

// -1 = automatic, otherwise static_cast<int>(Isa).
std::atomic<int> g_forced{-1};

DotFn dot_fn(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::Avx2) return &avx2::dot;
#endif
  (void)isa;
  return &scalar::dot;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

void force_isa(std::optional<Isa> isa) {
  if (isa && !isa_available(*isa)) {
    throw std::invalid_argument("kernel variant not available: " + std::string(to_string(*isa)));
  }
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  return dot_fn(active_isa())(a.data(), b.data(), a.size());
}

double norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero-norm vector");
  return dot(a, b) / (na * nb);
}

void EmbeddingMatrix::add_row(std::span<const float> v) {
  if (v.size() != dim_) {
    throw std::invalid_argument("embedding dimension " + std::to_string(v.size()) +
                                " does not match " + std::to_string(dim_));
  }
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("embedding has zero or non-finite norm");
  }
  data_.insert(data_.end(), v.begin(), v.end());
  norms_.push_back(n);
}

void EmbeddingMatrix::similarities(std::size_t query, std::span<double> out) const {
  if (out.size() != rows()) throw std::invalid_argument("similarities: output size mismatch");
  const auto fn = dot_fn(active_isa());
  const float* q = data_.data() + query * dim_;
  for (std::size_t r = 0; r < rows(); ++r) {
    out[r] = fn(q, data_.data() + r * dim_, dim_) / (norms_[query] * norms_[r]);
  }
}

std::vector<std::size_t> EmbeddingMatrix::ranked_neighbors(std::size_t query) const {
  std::vector<double> scores(rows());
  similarities(query, scores);
  std::vector<std::size_t> order;
  order.reserve(rows());
  for (std::size_t r = 0; r < rows(); ++r) {
    if (r != query) order.push_back(r);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  return order;
}

}  // namespace pjudge::kernels
