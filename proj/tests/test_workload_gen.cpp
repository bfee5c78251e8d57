#include <doctest.h>

#include <cmath>
#include <map>

#include "adae/burst_model.hpp"
#include "adae/error.hpp"
#include "adae/workload_gen.hpp"
#include "oracles.hpp"

using namespace adae;

namespace {

SegmentedRateModel constant(double rate, double duration) {
  return SegmentedRateModel(duration, {}, {rate});
}

// Short bursts on a quiet background: 50 s at 0.5, 10 s at 3.5, repeated.
SegmentedRateModel bursty_model() {
  std::vector<double> cps;
  std::vector<double> rates;
  for (int k = 0; k < 10; ++k) {
    rates.push_back(0.5);
    cps.push_back(60.0 * k + 50.0);
    rates.push_back(3.5);
    if (k < 9) cps.push_back(60.0 * (k + 1));
  }
  return SegmentedRateModel(600.0, cps, rates);
}

ArrivalTrace bursty_trace(std::uint64_t seed) { return generate({bursty_model(), seed}); }

void check_valid(const ArrivalTrace& t) {
  CHECK_NOTHROW(ArrivalTrace(t.events(), t.duration(), t.epoch()));
}

}  // namespace

TEST_CASE("zero rate gives an empty trace") {
  const ArrivalTrace t = generate({constant(0.0, 100.0), 1});
  CHECK(t.empty());
  CHECK(t.duration() == 100.0);
}

TEST_CASE("event counts follow Poisson(λT)") {
  const double expected = 200.0;
  double total = 0.0;
  int inside = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    const ArrivalTrace t = generate({constant(2.0, 100.0), static_cast<std::uint64_t>(s)});
    check_valid(t);
    const double n = static_cast<double>(t.size());
    total += n;
    if (std::abs(n - expected) <= 4.0 * std::sqrt(expected)) ++inside;
    for (const auto& e : t.events()) {
      CHECK(e.time >= 0.0);
      CHECK(e.time <= 100.0);
    }
  }
  const double mean = total / seeds;
  CHECK(std::abs(mean - expected) <= 3.0 * std::sqrt(expected / seeds));
  CHECK(inside >= 198);
}

TEST_CASE("within-segment gaps are exponential") {
  const SegmentedRateModel model(150.0, {100.0}, {2.0, 10.0});
  int pass = 0;
  for (int s = 0; s < 100; ++s) {
    const ArrivalTrace t = generate({model, static_cast<std::uint64_t>(1000 + s)});
    bool ok = true;
    for (std::size_t i = 0; i < 2; ++i) {
      const double lo = model.segment_start(i);
      const double hi = model.segment_end(i);
      std::vector<double> gaps;
      double prev = -1.0;
      for (const auto& e : t.events()) {
        if (e.time < lo || e.time >= hi) continue;
        if (prev >= 0.0) gaps.push_back(e.time - prev);
        prev = e.time;
      }
      REQUIRE(gaps.size() > 20);
      const double d = oracle::ks_exponential(gaps, model.rates()[i]);
      if (oracle::ks_pvalue(d, gaps.size()) < 0.01) ok = false;
    }
    if (ok) ++pass;
  }
  CHECK(pass >= 95);
}

TEST_CASE("generation is deterministic") {
  const GeneratorSpec spec{bursty_model(), 42, "wf", "cam"};
  const ArrivalTrace a = generate(spec);
  const ArrivalTrace b = generate(spec);
  CHECK(a == b);
  CHECK(serialize_trace(a, provenance_comments(spec)) ==
        serialize_trace(b, provenance_comments(spec)));
  CHECK_FALSE(generate({bursty_model(), 43, "wf", "cam"}) == a);
  for (const auto& e : a.events()) {
    CHECK(e.workflow_id == "wf");
    CHECK(e.source_id == "cam");
  }
}

TEST_CASE("provenance comments") {
  const GeneratorSpec spec{bursty_model(), 42};
  const auto lines = provenance_comments(spec);
  auto has = [&](const std::string& prefix) {
    for (const auto& l : lines) {
      if (l.rfind(prefix, 0) == 0) return true;
    }
    return false;
  };
  CHECK(has("seed=42"));
  CHECK(has("rng="));
  CHECK(has("model_hash="));
  CHECK(has("generator="));
}

TEST_CASE("scale_rates scales the expected count") {
  const SegmentedRateModel base(150.0, {100.0}, {2.0, 10.0});
  const double f = 1.7;
  const SegmentedRateModel scaled = scale_rates(base, f);
  const double expected = f * 700.0;
  const int seeds = 100;
  double total = 0.0;
  for (int s = 0; s < seeds; ++s) {
    total += static_cast<double>(generate({scaled, static_cast<std::uint64_t>(s)}).size());
  }
  CHECK(std::abs(total / seeds - expected) <= 3.0 * std::sqrt(expected / seeds));
}

TEST_CASE("correlated scaling") {
  const ArrivalTrace base = generate({constant(10.0, 100.0), 5});

  SUBCASE("factor 1 is the identity") { CHECK(scale_correlated(base, 1.0, 9) == base); }

  SUBCASE("factor below 1 is rejected") {
    CHECK_THROWS_AS(scale_correlated(base, 0.5, 9), ValidationError);
    CHECK_THROWS_AS(scale_correlated(base, std::nan(""), 9), ValidationError);
  }

  SUBCASE("factor 2 doubles the count and keeps the originals") {
    const double n0 = static_cast<double>(base.size());
    double total = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
      const ArrivalTrace t = scale_correlated(base, 2.0, static_cast<std::uint64_t>(s));
      check_valid(t);
      CHECK(t.duration() == base.duration());
      total += static_cast<double>(t.size());
      if (s == 0) {
        // Every original event survives unchanged.
        std::multimap<double, std::string> have;
        for (const auto& e : t.events()) have.emplace(e.time, e.source_id);
        for (const auto& e : base.events()) {
          auto it = have.find(e.time);
          REQUIRE(it != have.end());
          CHECK(it->second == e.source_id);
          have.erase(it);
        }
      }
    }
    CHECK(std::abs(total / seeds - 2.0 * n0) <= 3.0 * std::sqrt(n0 / seeds));
  }

  SUBCASE("tags are copied from originals") {
    std::vector<ArrivalEvent> ev;
    for (const auto& e : base.events()) ev.push_back({e.time, "cam-a", "wf-a"});
    const ArrivalTrace tagged(std::move(ev), base.duration());
    const ArrivalTrace scaled = scale_correlated(tagged, 3.0, 1);
    for (const auto& e : scaled.events()) {
      CHECK(e.source_id == "cam-a");
      CHECK(e.workflow_id == "wf-a");
    }
  }
}

TEST_CASE("correlated scaling preserves burstiness") {
  int within = 0;
  for (int s = 0; s < 20; ++s) {
    const ArrivalTrace base = bursty_trace(static_cast<std::uint64_t>(s));
    const double c0 = coefficient_of_variation(base).cov;
    const double c2 =
        coefficient_of_variation(scale_correlated(base, 2.0, static_cast<std::uint64_t>(s + 100)))
            .cov;
    if (std::abs(c2 - c0) <= 0.25 * c0) ++within;
  }
  CHECK(within == 20);
}

TEST_CASE("independent scaling") {
  const ArrivalTrace base = generate({constant(1.0, 100.0), 3});

  SUBCASE("100 events, 3 copies") {
    std::vector<ArrivalEvent> ev;
    for (int i = 0; i < 100; ++i) ev.push_back({i * 0.9, "s"});
    const ArrivalTrace hundred(std::move(ev), 100.0);
    const ArrivalTrace t = scale_independent(hundred, 3, 11);
    CHECK(t.size() == 300);
    CHECK(t.duration() == 100.0);
    check_valid(t);
    std::map<std::string, int> per_source;
    for (const auto& e : t.events()) ++per_source[e.source_id];
    CHECK(per_source == std::map<std::string, int>{{"s#0", 100}, {"s#1", 100}, {"s#2", 100}});
  }

  SUBCASE("zero offset gives the original up to the suffix") {
    const ArrivalTrace t = scale_independent(base, std::vector<double>{0.0});
    REQUIRE(t.size() == base.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t.events()[i].time == base.events()[i].time);
      CHECK(t.events()[i].source_id == base.events()[i].source_id + "#0");
    }
  }

  SUBCASE("offsets wrap around the duration") {
    const ArrivalTrace one({{90.0, "s"}}, 100.0);
    const ArrivalTrace t = scale_independent(one, std::vector<double>{20.0});
    REQUIRE(t.size() == 1);
    CHECK(t.events()[0].time == doctest::Approx(10.0));
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(scale_independent(base, 0, 1), ValidationError);
    CHECK_THROWS_AS(scale_independent(base, std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(scale_independent(base, std::vector<double>{100.0}), ValidationError);
    CHECK_THROWS_AS(scale_independent(base, std::vector<double>{-1.0}), ValidationError);
  }

  SUBCASE("deterministic") {
    CHECK(scale_independent(base, 4, 8) == scale_independent(base, 4, 8));
  }
}

TEST_CASE("independent scaling is less bursty than correlated") {
  int less = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const ArrivalTrace base = bursty_trace(static_cast<std::uint64_t>(500 + s));
    const double ind =
        coefficient_of_variation(scale_independent(base, 4, static_cast<std::uint64_t>(s))).cov;
    const double cor =
        coefficient_of_variation(scale_correlated(base, 4.0, static_cast<std::uint64_t>(s))).cov;
    if (ind < cor) ++less;
  }
  CHECK(less >= 45);
}

TEST_CASE("workload mixing") {
  SUBCASE("single component matches the total rate") {
    WorkloadMix m{{{bursty_model(), 1.0, "wf"}}};
    const double rate = 5.0;
    const double duration = 600.0;
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
      const ArrivalTrace t = mix(m, rate, duration, static_cast<std::uint64_t>(s));
      CHECK(t.duration() == duration);
      total += static_cast<double>(t.size());
    }
    const double expected = rate * duration;
    CHECK(std::abs(total / seeds - expected) <= 3.0 * std::sqrt(expected / seeds));
  }

  SUBCASE("shares set per-workflow proportions") {
    WorkloadMix m{{{bursty_model(), 0.3, "a"}, {constant(1.0, 600.0), 0.7, "b"}}};
    for (int s = 0; s < 10; ++s) {
      const ArrivalTrace t = mix(m, 10000.0 / 600.0, 600.0, static_cast<std::uint64_t>(s));
      check_valid(t);
      double a = 0.0;
      for (const auto& e : t.events()) a += e.workflow_id == "a" ? 1.0 : 0.0;
      const double n = static_cast<double>(t.size());
      CHECK(std::abs(a / n - 0.3) <= 0.03);
      CHECK(std::abs((n - a) / n - 0.7) <= 0.03);
    }
  }

  SUBCASE("trace components are fitted then regenerated") {
    const ArrivalTrace src = bursty_trace(77);
    WorkloadMix m{{{src, 1.0, "t"}}};
    const SegmentedRateModel got = component_rate_model(m.components[0], 2.0, 1200.0);
    CHECK(got.duration() == 1200.0);
    CHECK(got.mean_rate() == doctest::Approx(2.0));
    const ArrivalTrace t = mix(m, 2.0, 1200.0, 3);
    CHECK_FALSE(t.empty());
    for (const auto& e : t.events()) CHECK(e.workflow_id == "t");
  }

  SUBCASE("invalid shares") {
    WorkloadMix bad{{{constant(1.0, 10.0), 0.5, "a"}, {constant(1.0, 10.0), 0.6, "b"}}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(mix(bad, 1.0, 10.0, 1), ValidationError);
    WorkloadMix zero{{{constant(1.0, 10.0), 0.0, "a"}, {constant(1.0, 10.0), 1.0, "b"}}};
    CHECK_THROWS_AS(zero.validate(), ValidationError);
    WorkloadMix empty_rate{{{constant(0.0, 10.0), 1.0, "a"}}};
    CHECK_THROWS_AS(mix(empty_rate, 1.0, 10.0, 1), ValidationError);
    WorkloadMix ok{{{constant(1.0, 10.0), 1.0, "a"}}};
    CHECK_THROWS_AS(mix(ok, 0.0, 10.0, 1), ValidationError);
  }

  SUBCASE("deterministic") {
    WorkloadMix m{{{bursty_model(), 0.3, "a"}, {constant(1.0, 600.0), 0.7, "b"}}};
    CHECK(mix(m, 3.0, 600.0, 12) == mix(m, 3.0, 600.0, 12));
  }
}
