#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "adae/burst_model.hpp"
#include "adae/trace_io.hpp"

namespace adae {

inline constexpr std::string_view kGeneratorVersion = "adae-gen/1";

struct GeneratorSpec {
  SegmentedRateModel model;
  std::uint64_t seed = 0;
  std::string workflow_id{kDefaultWorkflow};
  std::string source_id = "gen";
};

// Piecewise Poisson arrivals. For each segment: N ~ Poisson(λ·d), then N
// uniform timestamps on the segment, sorted; segments are concatenated.
ArrivalTrace generate(const GeneratorSpec& spec);

// Comment lines recording seed, RNG algorithm, model hash and generator
// version, for serialize_trace().
std::vector<std::string> provenance_comments(const GeneratorSpec& spec);

// Thickens bursts in place. A rate model is fitted to the trace; every
// segment then receives Poisson((factor-1)·λ·d) extra uniform arrivals,
// each tagged like a randomly chosen original event of that segment.
// Original events are kept verbatim. `factor` must be ≥ 1.
ArrivalTrace scale_correlated(const ArrivalTrace& trace, double factor, std::uint64_t seed,
                              const SegmentationOptions& fit = {});

// Superimposes `copies` replicas of the trace, replica k circularly shifted
// by offsets[k] (wrapping modulo the duration) and its source ids suffixed
// with "#k".
ArrivalTrace scale_independent(const ArrivalTrace& trace, const std::vector<double>& offsets);
// As above with offsets drawn uniformly from [0, T).
ArrivalTrace scale_independent(const ArrivalTrace& trace, std::size_t copies, std::uint64_t seed);

struct MixComponent {
  std::variant<SegmentedRateModel, ArrivalTrace> source;
  double share = 1.0;
  std::string workflow_id{kDefaultWorkflow};
  std::string source_id = "mix";
};

struct WorkloadMix {
  std::vector<MixComponent> components;

  // Throws ValidationError unless shares lie in (0, 1] and sum to 1 ± 1e-9.
  void validate() const;
};

// Rate model a component contributes: traces are fitted with default
// segmentation; the result is tiled to `duration` and rescaled so its mean
// rate is share × total_mean_rate.
SegmentedRateModel component_rate_model(const MixComponent& component, double total_mean_rate,
                                        double duration);

// Generates every component from its rescaled model (seed derived per
// component index) and merges the tagged results.
ArrivalTrace mix(const WorkloadMix& workload, double total_mean_rate, double duration,
                 std::uint64_t seed);

}  // namespace adae
