#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace adae {

// Reproducible random source.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distributions below are implemented here rather than taken
// from <random>, whose algorithms are implementation-defined, so that a seed
// yields the same stream on every platform and standard library.
class Rng {
 public:
  // Identifier written to output metadata.
  static constexpr std::string_view kAlgorithm = "mt19937_64/u53/poisson-knuth-ptrs";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Poisson(mean). Knuth multiplication for mean < 10, Hormann's PTRS above.
  std::uint64_t poisson(double mean);
  // Number of attempts until first success, success probability 1 - loss.
  std::uint64_t attempts_until_success(double loss);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace adae
