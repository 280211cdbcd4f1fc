#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pjudge/kernels/similarity.h"
#include "pjudge/random.h"

namespace pjudge::kernels {
namespace {

// Restores automatic dispatch when a test forces a variant.
struct IsaGuard {
  ~IsaGuard() { force_isa(std::nullopt); }
};

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  if (isa_available(Isa::Avx2)) out.push_back(Isa::Avx2);
  return out;
}

TEST(Cosine, Examples) {
  IsaGuard guard;
  for (auto isa : available_isas()) {
    force_isa(isa);
    const std::vector<float> a{1, 0}, b{0, 1}, c{1, 1}, d{2, 0};
    EXPECT_DOUBLE_EQ(cosine_similarity(a, d), 1.0) << to_string(isa);
    EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0) << to_string(isa);
    EXPECT_NEAR(cosine_similarity(a, c), 0.70710678118654752, 1e-12) << to_string(isa);
  }
}

TEST(Cosine, RejectsMismatchAndZero) {
  const std::vector<float> a{1, 0}, b{1, 0, 0}, z{0, 0};
  EXPECT_THROW(cosine_similarity(a, b), std::invalid_argument);
  EXPECT_THROW(cosine_similarity(a, z), std::invalid_argument);
}

// Reference dot product in long double, independent of both kernels.
long double reference_dot(const std::vector<float>& a, const std::vector<float>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

TEST(Dot, VariantsAgreeWithReference) {
  Rng rng(5);
  // Lengths straddle the 8- and 16-lane boundaries and the remainder loop.
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 1000u, 1537u}) {
    std::vector<float> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<float>(rng.unit() * 2 - 1);
      b[i] = static_cast<float>(rng.unit() * 2 - 1);
    }
    const double ref = static_cast<double>(reference_dot(a, b));
    double mag = 0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(static_cast<double>(a[i]) * b[i]);
    const double tol = 1e-12 * std::max(1.0, mag);
    EXPECT_NEAR(scalar::dot(a.data(), b.data(), n), ref, tol) << n;
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_available(Isa::Avx2)) EXPECT_NEAR(avx2::dot(a.data(), b.data(), n), ref, tol) << n;
#endif
  }
}

TEST(Dispatch, ForceAndRestore) {
  IsaGuard guard;
  force_isa(Isa::Scalar);
  EXPECT_EQ(active_isa(), Isa::Scalar);
  if (!isa_available(Isa::Avx2)) {
    EXPECT_THROW(force_isa(Isa::Avx2), std::invalid_argument);
  } else {
    force_isa(Isa::Avx2);
    EXPECT_EQ(active_isa(), Isa::Avx2);
  }
  force_isa(std::nullopt);
  EXPECT_TRUE(isa_available(active_isa()));
}

TEST(EmbeddingMatrix, RankedNeighborsExcludeSelfAndOrderByCosine) {
  EmbeddingMatrix m(2);
  m.add_row(std::vector<float>{1, 0});    // 0
  m.add_row(std::vector<float>{0, 1});    // 1
  m.add_row(std::vector<float>{1, 1});    // 2
  m.add_row(std::vector<float>{3, 0.1f}); // 3
  m.add_row(std::vector<float>{1, 0});    // 4, ties with 0 when querying 3
  EXPECT_EQ(m.ranked_neighbors(0), (std::vector<std::size_t>{4, 3, 2, 1}));
  EXPECT_EQ(m.ranked_neighbors(3), (std::vector<std::size_t>{0, 4, 2, 1}));
  EXPECT_THROW(m.add_row(std::vector<float>{1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(m.add_row(std::vector<float>{0, 0}), std::invalid_argument);
}

TEST(EmbeddingMatrix, NeighborsPropertyOnRandomRows) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 1 + rng.below(40), rows = 2 + rng.below(30);
    EmbeddingMatrix m(dim);
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<float> v(dim);
      for (auto& x : v) x = static_cast<float>(rng.unit() - 0.5);
      v[0] += 2.0f;  // keep the norm away from zero
      m.add_row(v);
    }
    for (std::size_t q = 0; q < rows; ++q) {
      const auto ranked = m.ranked_neighbors(q);
      ASSERT_EQ(ranked.size(), rows - 1);
      std::vector<double> sims(rows);
      m.similarities(q, sims);
      for (std::size_t k = 0; k < ranked.size(); ++k) {
        EXPECT_NE(ranked[k], q);
        if (k) EXPECT_GE(sims[ranked[k - 1]], sims[ranked[k]]);
      }
    }
  }
}

}  // namespace
}  // namespace pjudge::kernels
