#include "adae/burst_model.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "adae/error.hpp"
#include "adae/kernels.hpp"

namespace adae {

SegmentedRateModel::SegmentedRateModel(double duration, std::vector<double> change_points,
                                       std::vector<double> rates)
    : duration_(duration), change_points_(std::move(change_points)), rates_(std::move(rates)) {
  if (!std::isfinite(duration_) || duration_ <= 0.0) {
    throw ValidationError("duration must be positive and finite", "duration");
  }
  if (rates_.size() != change_points_.size() + 1) {
    throw ValidationError("need exactly one more rate than change points", "rates");
  }
  double prev = 0.0;
  for (std::size_t i = 0; i < change_points_.size(); ++i) {
    const double t = change_points_[i];
    if (!std::isfinite(t) || t <= prev || t >= duration_) {
      throw ValidationError("change points must be strictly increasing inside (0, duration)",
                            "change_points[" + std::to_string(i) + "]");
    }
    prev = t;
  }
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!std::isfinite(rates_[i]) || rates_[i] < 0.0) {
      throw ValidationError("rates must be finite and non-negative",
                            "rates[" + std::to_string(i) + "]");
    }
  }
}

double SegmentedRateModel::expected_count() const {
  double total = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) total += rates_[i] * segment_length(i);
  return total;
}

double SegmentedRateModel::mean_rate() const { return expected_count() / duration_; }

double gap_cov(const std::vector<double>& sorted_times) {
  if (sorted_times.size() < 3) {
    throw ValidationError("coefficient of variation needs at least 3 events");
  }
  std::vector<double> gaps(sorted_times.size() - 1);
  kernels::adjacent_diff(sorted_times, gaps);
  const double mean = kernels::sum(gaps) / static_cast<double>(gaps.size());
  if (!(mean > 0.0)) throw ValidationError("all events are simultaneous (mean gap is zero)");
  const double var = kernels::sum_sq_dev(gaps, mean) / static_cast<double>(gaps.size());
  return std::sqrt(var) / mean;
}

BurstinessSummary coefficient_of_variation(const ArrivalTrace& trace) {
  BurstinessSummary s;
  s.cov = gap_cov(trace.times());
  s.event_count = trace.size();
  s.mean_rate = static_cast<double>(trace.size()) / trace.duration();
  return s;
}

std::vector<double> bin_counts(const ArrivalTrace& trace, std::size_t bins) {
  std::vector<double> counts(bins, 0.0);
  const double width = trace.duration() / static_cast<double>(bins);
  for (const auto& e : trace.events()) {
    auto k = static_cast<std::size_t>(e.time / width);
    counts[std::min(k, bins - 1)] += 1.0;
  }
  return counts;
}

double default_penalty(const std::vector<double>& counts) {
  const std::size_t n = counts.size();
  if (n < 2) return 0.0;
  std::vector<double> d(n - 1);
  kernels::adjacent_diff(counts, d);
  // Noise variance from first differences; level shifts barely move it.
  const double noise = kernels::sum_sq_dev(d, 0.0) / (2.0 * static_cast<double>(n - 1));
  return 2.0 * noise * std::log(static_cast<double>(n));
}

namespace {

struct PrefixSums {
  std::vector<double> s, s2;

  explicit PrefixSums(const std::vector<double>& x) : s(x.size() + 1, 0.0), s2(x.size() + 1, 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      s[i + 1] = s[i] + x[i];
      s2[i + 1] = s2[i] + x[i] * x[i];
    }
  }

  // SSE of x[a, b) about its mean.
  double cost(std::size_t a, std::size_t b) const {
    const double n = static_cast<double>(b - a);
    const double sum = s[b] - s[a];
    return std::max(0.0, (s2[b] - s2[a]) - sum * sum / n);
  }
};

// Interval splits are searched exhaustively only up to this many bins.
constexpr std::size_t kIntervalSearchLimit = 4096;

struct Candidate {
  std::size_t begin, end;  // bin range
  std::size_t cut1 = 0;    // 0 when no split is possible
  std::size_t cut2 = 0;    // nonzero: isolate [cut1, cut2) as its own segment
  double value = 0.0;      // SSE reduction per added segment
};

Candidate best_split(const PrefixSums& ps, std::size_t begin, std::size_t end) {
  Candidate c{begin, end};
  if (end - begin < 2) return c;
  const double whole = ps.cost(begin, end);
  for (std::size_t k = begin + 1; k < end; ++k) {
    const double g = whole - ps.cost(begin, k) - ps.cost(k, end);
    if (g > c.value) {
      c.value = g;
      c.cut1 = k;
    }
  }
  // A burst that starts and ends inside the range needs two cuts at once;
  // a single cut at either edge gains little.
  if (end - begin >= 3 && end - begin <= kIntervalSearchLimit) {
    for (std::size_t i = begin + 1; i + 1 < end; ++i) {
      const double left = ps.cost(begin, i);
      for (std::size_t j = i + 1; j < end; ++j) {
        const double g = 0.5 * (whole - left - ps.cost(i, j) - ps.cost(j, end));
        if (g > c.value) {
          c.value = g;
          c.cut1 = i;
          c.cut2 = j;
        }
      }
    }
  }
  return c;
}

}  // namespace

namespace {

// `count_scale` > 0 raises a segment's threshold to count_scale × its mean
// bin count, or × 1 below one event per bin (Poisson counts have variance
// equal to their mean, and a lone event already costs 1 in SSE).
SegmentedRateModel segment_trace(const ArrivalTrace& trace, double bin_width, double penalty, double count_scale) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw ValidationError("bin width must be positive", "bin_width");
  }
  if (bin_width >= trace.duration()) {
    throw ValidationError("bin width must be shorter than the trace (a single bin cannot be segmented)",
                          "bin_width");
  }
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) {
    throw ValidationError("penalty must be non-negative", "penalty");
  }
  const double T = trace.duration();
  if (trace.size() < 2) {
    return SegmentedRateModel::constant(T, static_cast<double>(trace.size()) / T);
  }

  const auto bins = static_cast<std::size_t>(std::ceil(T / bin_width));
  const double width = T / static_cast<double>(bins);
  const auto counts = bin_counts(trace, bins);
  const PrefixSums ps(counts);
  // Splits whose gain is below rounding noise are not real structure.
  const double floor_gain = 1e-12 * (ps.s2.back() + 1.0);
  const double threshold = std::max(penalty, floor_gain);

  auto threshold_of = [&](const Candidate& c) {
    if (count_scale <= 0.0) return threshold;
    const double mean = (ps.s[c.end] - ps.s[c.begin]) / static_cast<double>(c.end - c.begin);
    return std::max(threshold, count_scale * std::max(mean, 1.0));
  };
  // Best-first: the pending action with the largest gain per added segment
  // runs while any gain exceeds its threshold. Actions do not depend on the
  // penalty, so a larger penalty yields a subset of the same cuts.
  std::vector<Candidate> segments{best_split(ps, 0, bins)};
  for (;;) {
    std::size_t pick = segments.size();
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].cut1 == 0 || !(segments[i].value > threshold_of(segments[i]))) continue;
      if (pick == segments.size() || segments[i].value > segments[pick].value) pick = i;
    }
    if (pick == segments.size()) break;
    const Candidate c = segments[pick];
    std::vector<Candidate> parts;
    if (c.cut2 == 0) {
      parts = {best_split(ps, c.begin, c.cut1), best_split(ps, c.cut1, c.end)};
    } else {
      parts = {best_split(ps, c.begin, c.cut1), best_split(ps, c.cut1, c.cut2), best_split(ps, c.cut2, c.end)};
    }
    segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(pick));
    segments.insert(segments.begin() + static_cast<std::ptrdiff_t>(pick), parts.begin(), parts.end());
  }

  std::vector<double> change_points, rates;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const double start = static_cast<double>(seg.begin) * width;
    const double end = seg.end == bins ? T : static_cast<double>(seg.end) * width;
    if (i > 0) change_points.push_back(start);
    rates.push_back((ps.s[seg.end] - ps.s[seg.begin]) / (end - start));
  }
  return SegmentedRateModel(T, std::move(change_points), std::move(rates));
}

}  // namespace

SegmentedRateModel detect_change_points(const ArrivalTrace& trace, double bin_width, double penalty) {
  return segment_trace(trace, bin_width, penalty, 0.0);
}

SegmentedRateModel detect_change_points(const ArrivalTrace& trace, const SegmentationOptions& options) {
  const double T = trace.duration();
  const double bin_width = options.bin_width.value_or(T / 200.0);
  double penalty = 0.0;
  if (options.penalty) {
    penalty = *options.penalty;
  } else if (bin_width > 0.0 && bin_width < T) {
    const auto bins = static_cast<std::size_t>(std::ceil(T / bin_width));
    penalty = default_penalty(bin_counts(trace, bins));
    return segment_trace(trace, bin_width, penalty, 2.0 * std::log(static_cast<double>(bins)));
  }
  return detect_change_points(trace, bin_width, penalty);
}

SegmentedRateModel scale_rates(const SegmentedRateModel& model, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw ValidationError("scale factor must be positive and finite", "factor");
  }
  std::vector<double> rates = model.rates();
  for (double& r : rates) r *= factor;
  return SegmentedRateModel(model.duration(), model.change_points(), std::move(rates));
}

double factor_for_utilization(const SegmentedRateModel& model, double service_rate,
                              double target_utilization) {
  if (!(service_rate > 0.0) || !std::isfinite(service_rate)) {
    throw ValidationError("service rate must be positive", "service_rate");
  }
  if (!(target_utilization > 0.0 && target_utilization < 1.0)) {
    throw ValidationError("target utilization must lie in (0, 1)", "target_utilization");
  }
  const double mean = model.mean_rate();
  if (!(mean > 0.0)) throw ValidationError("rate model has zero mean rate", "rates");
  return target_utilization * service_rate / mean;
}

SegmentedRateModel tile_to_duration(const SegmentedRateModel& model, double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ValidationError("duration must be positive", "duration");
  }
  std::vector<double> cps, rates;
  const double period = model.duration();
  double offset = 0.0;
  while (offset < duration) {
    for (std::size_t i = 0; i < model.segment_count(); ++i) {
      const double start = offset + model.segment_start(i);
      if (start >= duration) break;
      const double r = model.rates()[i];
      if (start > 0.0) {
        if (!rates.empty() && rates.back() == r) continue;  // merge equal neighbours
        cps.push_back(start);
      }
      rates.push_back(r);
    }
    offset += period;
  }
  return SegmentedRateModel(duration, std::move(cps), std::move(rates));
}

SegmentedRateModel add_models(const SegmentedRateModel& a, const SegmentedRateModel& b) {
  const double T = std::max(a.duration(), b.duration());
  std::vector<double> edges;
  for (double t : a.change_points()) edges.push_back(t);
  for (double t : b.change_points()) edges.push_back(t);
  if (a.duration() < T) edges.push_back(a.duration());
  if (b.duration() < T) edges.push_back(b.duration());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  auto rate_at = [](const SegmentedRateModel& m, double t) {
    if (t >= m.duration()) return 0.0;
    const auto& cps = m.change_points();
    const auto idx = static_cast<std::size_t>(std::upper_bound(cps.begin(), cps.end(), t) - cps.begin());
    return m.rates()[idx];
  };
  std::vector<double> cps, rates;
  rates.push_back(rate_at(a, 0.0) + rate_at(b, 0.0));
  for (double t : edges) {
    const double r = rate_at(a, t) + rate_at(b, t);
    if (r == rates.back()) continue;
    cps.push_back(t);
    rates.push_back(r);
  }
  return SegmentedRateModel(T, std::move(cps), std::move(rates));
}

std::string rate_model_to_json(const SegmentedRateModel& model, int indent) {
  nlohmann::ordered_json j;
  j["duration"] = model.duration();
  j["change_points"] = model.change_points();
  j["rates"] = model.rates();
  return j.dump(indent) + "\n";
}

SegmentedRateModel rate_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rate model: ") + e.what());
  }
  try {
    return SegmentedRateModel(j.at("duration").get<double>(),
                              j.value("change_points", std::vector<double>{}),
                              j.at("rates").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("rate model: ") + e.what());
  }
}

}  // namespace adae
