#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adae/trace_io.hpp"

namespace adae {

// Piecewise-constant Poisson rate over [0, duration].
//
// Segment i spans [boundary(i), boundary(i+1)) where the boundaries are
// 0, change_points..., duration. Rates are requests/second.
class SegmentedRateModel {
 public:
  // Throws ValidationError on: non-positive duration, change points not
  // strictly increasing inside (0, duration), rates.size() !=
  // change_points.size() + 1, or a negative/non-finite rate.
  SegmentedRateModel(double duration, std::vector<double> change_points, std::vector<double> rates);

  static SegmentedRateModel constant(double duration, double rate) {
    return SegmentedRateModel(duration, {}, {rate});
  }

  double duration() const noexcept { return duration_; }
  const std::vector<double>& change_points() const noexcept { return change_points_; }
  const std::vector<double>& rates() const noexcept { return rates_; }
  std::size_t segment_count() const noexcept { return rates_.size(); }

  double segment_start(std::size_t i) const { return i == 0 ? 0.0 : change_points_[i - 1]; }
  double segment_end(std::size_t i) const {
    return i == change_points_.size() ? duration_ : change_points_[i];
  }
  double segment_length(std::size_t i) const { return segment_end(i) - segment_start(i); }

  // Σ λᵢ dᵢ
  double expected_count() const;
  // Σ λᵢ dᵢ / T
  double mean_rate() const;

  friend bool operator==(const SegmentedRateModel&, const SegmentedRateModel&) = default;

 private:
  double duration_;
  std::vector<double> change_points_;
  std::vector<double> rates_;
};

struct BurstinessSummary {
  double cov = 0.0;        // population std / mean of inter-arrival gaps
  double mean_rate = 0.0;  // events / duration
  std::size_t event_count = 0;
};

// Requires ≥ 3 events and a positive mean gap.
BurstinessSummary coefficient_of_variation(const ArrivalTrace& trace);

// Same statistic from raw sorted times; used where no trace object exists.
double gap_cov(const std::vector<double>& sorted_times);

struct SegmentationOptions {
  std::optional<double> bin_width;  // default: duration / 200
  std::optional<double> penalty;    // default: default_penalty(counts)
};

// Penalized top-down segmentation of the binned count series.
//
// The trace is binned into n = ceil(T / bin_width) equal bins of width T/n.
// Starting from one segment, each segment proposes its best action: one cut,
// or two cuts isolating an interior interval (searched for segments of up to
// 4096 bins). Actions are ranked by count-SSE reduction per added segment;
// the best runs while that value exceeds `penalty`, greedily minimizing
// SSE + penalty × segments. Segment rate = events in segment / length.
SegmentedRateModel detect_change_points(const ArrivalTrace& trace, double bin_width, double penalty);
SegmentedRateModel detect_change_points(const ArrivalTrace& trace,
                                        const SegmentationOptions& options = {});

// Event counts per equal-width bin (n bins over [0, T]; events at T fall in
// the last bin).
std::vector<double> bin_counts(const ArrivalTrace& trace, std::size_t bins);

// 2·σ̂²·ln(n), σ̂² = Σ(c[i+1] - c[i])² / (2(n-1)): a BIC-style penalty with
// the noise level estimated from first differences.
double default_penalty(const std::vector<double>& counts);

// Every rate multiplied by factor (> 0, finite).
SegmentedRateModel scale_rates(const SegmentedRateModel& model, double factor);

// Factor f with f · mean_rate / service_rate = target_utilization.
double factor_for_utilization(const SegmentedRateModel& model, double service_rate,
                              double target_utilization);

// Crops (if shorter) or periodically repeats (if longer) the model to span
// exactly `duration`.
SegmentedRateModel tile_to_duration(const SegmentedRateModel& model, double duration);

// Pointwise sum of rate functions over the longer of the two durations; a
// model contributes zero past its own end.
SegmentedRateModel add_models(const SegmentedRateModel& a, const SegmentedRateModel& b);

// Document form: {"duration": T, "change_points": [...], "rates": [...]}.
std::string rate_model_to_json(const SegmentedRateModel& model, int indent = 2);
SegmentedRateModel rate_model_from_json(const std::string& text);

}  // namespace adae
