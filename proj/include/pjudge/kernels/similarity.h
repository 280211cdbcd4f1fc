#pragma once

// Dot-product / cosine kernels behind the nearest-persona search.
//
// Storage is float; accumulation is double in every variant so that the
// scalar reference and the vector variants agree to ~1e-12 relative.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pjudge::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// True when the variant was compiled in and the CPU supports it.
bool isa_available(Isa isa);

/// The variant dispatch() currently selects: the forced one if set, else the
/// best available.
Isa active_isa();

/// Pins dispatch to one variant (tests, benchmarking). nullopt restores
/// automatic selection. Throws std::invalid_argument if unavailable.
void force_isa(std::optional<Isa> isa);

namespace scalar {
double dot(const float* a, const float* b, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const float* a, const float* b, std::size_t n);
}  // namespace avx2
#endif

/// Dispatched dot product over equal-length spans.
double dot(std::span<const float> a, std::span<const float> b);

double norm(std::span<const float> v);

/// Cosine similarity. Throws std::invalid_argument on dimension mismatch or a
/// zero-norm input.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Row-major matrix of equal-dimension, non-zero vectors with cached norms.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

  /// Throws std::invalid_argument on dimension mismatch or zero norm.
  void add_row(std::span<const float> v);

  std::size_t rows() const { return norms_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  /// Cosine of `query` (a row index) against every row, written to `out`.
  void similarities(std::size_t query, std::span<double> out) const;

  /// Other rows ordered by descending cosine to `query`; equal scores keep
  /// ascending row order. The query row itself is excluded.
  std::vector<std::size_t> ranked_neighbors(std::size_t query) const;

 private:
  std::size_t dim_;
  std::vector<float> data_;
  std::vector<double> norms_;
};

}  // namespace pjudge::kernels
