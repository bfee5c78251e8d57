#include <atomic>
#include <cassert>

#include "adae/kernels.hpp"

namespace adae::kernels {

namespace {

bool detect_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Isa>& isa_slot() {
  static std::atomic<Isa> slot{detect_avx2() ? Isa::avx2 : Isa::scalar};
  return slot;
}

}  // namespace

bool cpu_has_avx2() {
  static const bool has = detect_avx2();
  return has;
}

Isa active_isa() { return isa_slot().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2()) isa = Isa::scalar;
  isa_slot().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double sum(std::span<const double> xs) {
  return active_isa() == Isa::avx2 ? avx2::sum(xs) : scalar::sum(xs);
}

double sum_sq_dev(std::span<const double> xs, double mean) {
  return active_isa() == Isa::avx2 ? avx2::sum_sq_dev(xs, mean) : scalar::sum_sq_dev(xs, mean);
}

void adjacent_diff(std::span<const double> xs, std::span<double> out) {
  assert(xs.empty() ? out.empty() : out.size() == xs.size() - 1);
  if (active_isa() == Isa::avx2) {
    avx2::adjacent_diff(xs, out);
  } else {
    scalar::adjacent_diff(xs, out);
  }
}

std::size_t count_le(std::span<const double> xs, double threshold) {
  return active_isa() == Isa::avx2 ? avx2::count_le(xs, threshold)
                                   : scalar::count_le(xs, threshold);
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active_isa() == Isa::avx2 ? avx2::sum_abs_diff(a, b) : scalar::sum_abs_diff(a, b);
}

}  // namespace adae::kernels
