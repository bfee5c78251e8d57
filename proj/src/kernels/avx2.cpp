#include "adae/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#define ADAE_HAVE_X86 1
#include <immintrin.h>
#else
#define ADAE_HAVE_X86 0
#endif

namespace adae::kernels::avx2 {

#if ADAE_HAVE_X86

namespace {
__attribute__((target("avx2"))) inline double fold(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}
}  // namespace

__attribute__((target("avx2"))) double sum(std::span<const double> xs) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t n = xs.size();
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(xs.data() + i));
  double r = fold(acc);
  for (; i < n; ++i) r += xs[i];
  return r;
}

__attribute__((target("avx2"))) double sum_sq_dev(std::span<const double> xs, double mean) {
  const __m256d m = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t n = xs.size();
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + i), m);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double r = fold(acc);
  for (; i < n; ++i) {
    const double d = xs[i] - mean;
    r += d * d;
  }
  return r;
}

__attribute__((target("avx2"))) void adjacent_diff(std::span<const double> xs,
                                                   std::span<double> out) {
  const std::size_t n = xs.empty() ? 0 : xs.size() - 1;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d lo = _mm256_loadu_pd(xs.data() + i);
    const __m256d hi = _mm256_loadu_pd(xs.data() + i + 1);
    _mm256_storeu_pd(out.data() + i, _mm256_sub_pd(hi, lo));
  }
  for (; i < n; ++i) out[i] = xs[i + 1] - xs[i];
}

__attribute__((target("avx2"))) std::size_t count_le(std::span<const double> xs,
                                                     double threshold) {
  const __m256d t = _mm256_set1_pd(threshold);
  std::size_t c = 0;
  std::size_t i = 0;
  const std::size_t n = xs.size();
  for (; i + 4 <= n; i += 4) {
    const __m256d le = _mm256_cmp_pd(_mm256_loadu_pd(xs.data() + i), t, _CMP_LE_OQ);
    c += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(le)));
  }
  for (; i < n; ++i) c += (xs[i] <= threshold) ? 1 : 0;
  return c;
}

__attribute__((target("avx2"))) double sum_abs_diff(std::span<const double> a,
                                                    std::span<const double> b) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double r = fold(acc);
  for (; i < n; ++i) r += std::fabs(a[i] - b[i]);
  return r;
}

#else  // non-x86: route to the scalar reference

double sum(std::span<const double> xs) { return scalar::sum(xs); }
double sum_sq_dev(std::span<const double> xs, double mean) { return scalar::sum_sq_dev(xs, mean); }
void adjacent_diff(std::span<const double> xs, std::span<double> out) { scalar::adjacent_diff(xs, out); }
std::size_t count_le(std::span<const double> xs, double t) { return scalar::count_le(xs, t); }
double sum_abs_diff(std::span<const double> a, std::span<const double> b) { return scalar::sum_abs_diff(a, b); }

#endif

}  // namespace adae::kernels::avx2
