#pragma once

// Reduction kernels over contiguous double arrays.
//
// Every kernel has a scalar reference and an AVX2 variant. Both use the same
// four-lane blocked accumulation order, so results are bitwise identical
// regardless of which one the runtime dispatcher picks; the test suite checks
// this. Outputs of the simulator therefore do not depend on the host ISA.

#include <cstddef>
#include <span>
#include <string_view>

namespace adae::kernels {

enum class Isa { scalar, avx2 };

// Sum of all elements.
double sum(std::span<const double> xs);

// Σ (x - mean)².
double sum_sq_dev(std::span<const double> xs, double mean);

// out[i] = xs[i + 1] - xs[i]; out.size() must equal xs.size() - 1.
void adjacent_diff(std::span<const double> xs, std::span<double> out);

// Number of elements with x <= threshold. NaN never counts.
std::size_t count_le(std::span<const double> xs, double threshold);

// Σ |a[i] - b[i]|; spans must have equal length.
double sum_abs_diff(std::span<const double> a, std::span<const double> b);

// Currently dispatched ISA. Chosen once from CPUID unless overridden.
Isa active_isa();
// Forces a variant (falls back to scalar if the CPU lacks AVX2). Tests only.
void set_isa(Isa isa);
bool cpu_has_avx2();
std::string_view isa_name(Isa isa);

// Direct access to each implementation for equivalence tests.
namespace scalar {
double sum(std::span<const double> xs);
double sum_sq_dev(std::span<const double> xs, double mean);
void adjacent_diff(std::span<const double> xs, std::span<double> out);
std::size_t count_le(std::span<const double> xs, double threshold);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

namespace avx2 {
// Only callable when cpu_has_avx2() is true.
double sum(std::span<const double> xs);
double sum_sq_dev(std::span<const double> xs, double mean);
void adjacent_diff(std::span<const double> xs, std::span<double> out);
std::size_t count_le(std::span<const double> xs, double threshold);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
}  // namespace avx2

}  // namespace adae::kernels
