#include "adae/workload_gen.hpp"

#include <algorithm>
#include <cmath>

#include "adae/error.hpp"
#include "adae/hash.hpp"
#include "adae/rng.hpp"

namespace adae {

namespace {

// Appends Poisson(rate·length) sorted uniform arrivals on [start, end).
void sample_segment(Rng& rng, double start, double end, double rate, std::vector<double>& out) {
  const double length = end - start;
  if (!(rate > 0.0) || !(length > 0.0)) return;
  const std::uint64_t n = rng.poisson(rate * length);
  const std::size_t first = out.size();
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(rng.uniform(start, end));
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

}  // namespace

ArrivalTrace generate(const GeneratorSpec& spec) {
  Rng rng(spec.seed);
  const auto& m = spec.model;
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(m.expected_count() * 1.1) + 16);
  for (std::size_t i = 0; i < m.segment_count(); ++i) {
    sample_segment(rng, m.segment_start(i), m.segment_end(i), m.rates()[i], times);
  }
  std::vector<ArrivalEvent> events;
  events.reserve(times.size());
  for (double t : times) events.push_back({t, spec.source_id, spec.workflow_id});
  return ArrivalTrace(std::move(events), m.duration());
}

std::vector<std::string> provenance_comments(const GeneratorSpec& spec) {
  return {
      "generator=" + std::string(kGeneratorVersion),
      "rng=" + std::string(Rng::kAlgorithm),
      "seed=" + std::to_string(spec.seed),
      "model_hash=" + content_hash(rate_model_to_json(spec.model)),
  };
}

ArrivalTrace scale_correlated(const ArrivalTrace& trace, double factor, std::uint64_t seed,
                              const SegmentationOptions& fit) {
  if (!(factor >= 1.0) || !std::isfinite(factor)) {
    throw ValidationError("correlated scaling needs factor >= 1", "factor");
  }
  if (factor == 1.0 || trace.empty()) return trace;
  const SegmentedRateModel model = detect_change_points(trace, fit);
  Rng rng(seed);
  std::vector<ArrivalEvent> events = trace.events();
  const auto& orig = trace.events();
  std::vector<double> added;
  for (std::size_t i = 0; i < model.segment_count(); ++i) {
    const double start = model.segment_start(i);
    const double end = model.segment_end(i);
    const bool last = i + 1 == model.segment_count();
    // Original events of this segment, for tagging the added ones.
    auto lo = std::lower_bound(orig.begin(), orig.end(), start,
                               [](const ArrivalEvent& e, double t) { return e.time < t; });
    auto hi = last ? orig.end()
                   : std::lower_bound(orig.begin(), orig.end(), end,
                                      [](const ArrivalEvent& e, double t) { return e.time < t; });
    if (lo == hi) continue;
    added.clear();
    sample_segment(rng, start, end, (factor - 1.0) * model.rates()[i], added);
    const auto span = static_cast<std::uint64_t>(hi - lo);
    for (double t : added) {
      const ArrivalEvent& like = *(lo + static_cast<std::ptrdiff_t>(rng.below(span)));
      events.push_back({t, like.source_id, like.workflow_id});
    }
  }
  return ArrivalTrace::from_unsorted(std::move(events), trace.duration(), trace.epoch());
}

ArrivalTrace scale_independent(const ArrivalTrace& trace, const std::vector<double>& offsets) {
  if (offsets.empty()) throw ValidationError("independent scaling needs copies >= 1", "copies");
  const double T = trace.duration();
  std::vector<ArrivalEvent> events;
  events.reserve(trace.size() * offsets.size());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double off = offsets[k];
    if (!(off >= 0.0 && off < T)) {
      throw ValidationError("replica offset must lie in [0, duration)", "offsets");
    }
    const std::string suffix = "#" + std::to_string(k);
    for (const auto& e : trace.events()) {
      double t = e.time + off;
      if (t >= T) t -= T;
      if (t >= T || t < 0.0) t = 0.0;  // rounding at the wrap point
      events.push_back({t, e.source_id + suffix, e.workflow_id});
    }
  }
  return ArrivalTrace::from_unsorted(std::move(events), T, trace.epoch());
}

ArrivalTrace scale_independent(const ArrivalTrace& trace, std::size_t copies, std::uint64_t seed) {
  if (copies < 1) throw ValidationError("independent scaling needs copies >= 1", "copies");
  Rng rng(seed);
  std::vector<double> offsets(copies);
  for (double& o : offsets) o = rng.uniform(0.0, trace.duration());
  return scale_independent(trace, offsets);
}

void WorkloadMix::validate() const {
  if (components.empty()) throw ValidationError("workload mix has no components", "components");
  double total = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const double s = components[i].share;
    if (!(s > 0.0 && s <= 1.0)) {
      throw ValidationError("share must lie in (0, 1]", "components[" + std::to_string(i) + "].share");
    }
    total += s;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ValidationError("shares sum to " + format_double(total) + ", expected 1", "components");
  }
}

SegmentedRateModel component_rate_model(const MixComponent& component, double total_mean_rate,
                                        double duration) {
  SegmentedRateModel base = std::holds_alternative<SegmentedRateModel>(component.source)
                                ? std::get<SegmentedRateModel>(component.source)
                                : detect_change_points(std::get<ArrivalTrace>(component.source));
  SegmentedRateModel tiled = tile_to_duration(base, duration);
  const double mean = tiled.mean_rate();
  if (!(mean > 0.0)) {
    throw ValidationError("component '" + component.workflow_id + "' has zero mean rate");
  }
  return scale_rates(tiled, component.share * total_mean_rate / mean);
}

ArrivalTrace mix(const WorkloadMix& workload, double total_mean_rate, double duration,
                 std::uint64_t seed) {
  workload.validate();
  if (!(total_mean_rate > 0.0) || !std::isfinite(total_mean_rate)) {
    throw ValidationError("total mean rate must be positive", "total_mean_rate");
  }
  std::vector<ArrivalTrace> parts;
  for (std::size_t i = 0; i < workload.components.size(); ++i) {
    const auto& c = workload.components[i];
    GeneratorSpec spec{component_rate_model(c, total_mean_rate, duration), mix_seed(seed, i),
                       c.workflow_id, c.source_id};
    parts.push_back(generate(spec));
  }
  return merge_traces(parts);
}

}  // namespace adae
