#include "pjudge/kernels/similarity.h"

namespace pjudge::kernels::scalar {

double dot(const float* a, const float* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

}  // namespace pjudge::kernels::scalar
