#include "adae/kernels.hpp"

#include <cmath>

namespace adae::kernels::scalar {

// Lane layout mirrors the 256-bit variant: element i feeds lane i % 4 for
// full blocks; lanes fold as (l0 + l1) + (l2 + l3); the tail is added last.
namespace {
constexpr std::size_t kLanes = 4;

inline double fold(const double (&lane)[kLanes]) {
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}
}  // namespace

double sum(std::span<const double> xs) {
  double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  const std::size_t n = xs.size();
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) lane[j] += xs[i + j];
  }
  double r = fold(lane);
  for (; i < n; ++i) r += xs[i];
  return r;
}

double sum_sq_dev(std::span<const double> xs, double mean) {
  double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  const std::size_t n = xs.size();
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) {
      const double d = xs[i + j] - mean;
      lane[j] += d * d;
    }
  }
  double r = fold(lane);
  for (; i < n; ++i) {
    const double d = xs[i] - mean;
    r += d * d;
  }
  return r;
}

void adjacent_diff(std::span<const double> xs, std::span<double> out) {
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) out[i] = xs[i + 1] - xs[i];
}

std::size_t count_le(std::span<const double> xs, double threshold) {
  std::size_t c = 0;
  for (double x : xs) c += (x <= threshold) ? 1 : 0;
  return c;
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) lane[j] += std::fabs(a[i + j] - b[i + j]);
  }
  double r = fold(lane);
  for (; i < n; ++i) r += std::fabs(a[i] - b[i]);
  return r;
}

}  // namespace adae::kernels::scalar
