#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "adae/error.hpp"
#include "adae/placement.hpp"

using namespace adae;

namespace {

ModelProfile model(const std::string& id, std::vector<double> costs, double mem = 1.0) {
  ModelProfile m{id, {}};
  for (double c : costs) m.layers.push_back({c, mem, 1000.0});
  return m;
}

std::vector<NodeSpec> nodes(std::vector<double> speeds, std::vector<double> mems = {}) {
  std::vector<NodeSpec> out;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    out.push_back({"n" + std::to_string(i + 1), speeds[i], mems.empty() ? 1e9 : mems[i]});
  }
  return out;
}

ClusterSpec cluster(std::vector<NodeSpec> ns, std::vector<ModelProfile> ms) {
  std::vector<WorkflowSpec> wfs;
  for (const auto& m : ms) wfs.push_back({"wf-" + m.id, m.id, 1.0, 0.9});
  return ClusterSpec(std::move(ns), {}, std::move(ms), std::move(wfs));
}

RateMap unit_rates(const ClusterSpec& c) {
  RateMap r;
  for (const auto& w : c.workflows()) r[w.id] = 1.0;
  return r;
}

std::vector<PlacedSegment> segs(const PlacementPlan& p, const std::string& model_id) {
  const ModelAssignment* a = p.find(model_id);
  REQUIRE(a != nullptr);
  return a->segments;
}

double spread(const std::vector<double>& u) {
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  return *hi - *lo;
}

}  // namespace

TEST_CASE("strategy names") {
  for (Strategy s : all_strategies()) CHECK(parse_strategy(strategy_name(s)) == s);
  CHECK(parse_strategy("equal-utilization") == Strategy::equal_utilization);
  CHECK(parse_strategy("round_robin") == Strategy::round_robin);
  CHECK_THROWS_AS(parse_strategy("random"), ValidationError);
  CHECK(all_strategies().size() == 4);
}

TEST_CASE("single node") {
  SUBCASE("one node, two models") {
    const ClusterSpec c = cluster(nodes({1}), {model("a", {1, 1}), model("b", {2})});
    const PlacementPlan p = place_single_node(c);
    CHECK(segs(p, "a") == std::vector<PlacedSegment>{{"n1", 0, 1}});
    CHECK(segs(p, "b") == std::vector<PlacedSegment>{{"n1", 0, 0}});
    CHECK(validate_plan(c, p).ok());
  }
  SUBCASE("first feasible node") {
    const ClusterSpec c =
        cluster(nodes({1, 1}, {2.5, 10}), {model("a", {1, 1}), model("b", {2})});
    const PlacementPlan p = place_single_node(c);
    CHECK(segs(p, "a")[0].node_id == "n2");
    CHECK(segs(p, "b")[0].node_id == "n2");
  }
  SUBCASE("nothing fits") {
    const ClusterSpec c = cluster(nodes({1, 1}, {2, 2}), {model("a", {1, 1}), model("b", {2})});
    CHECK_THROWS_AS(place_single_node(c), InfeasibleError);
  }
}

TEST_CASE("round robin") {
  SUBCASE("cyclic") {
    const ClusterSpec c =
        cluster(nodes({1, 1}), {model("A", {1}), model("B", {1}), model("C", {1})});
    const PlacementPlan p = place_round_robin(c);
    CHECK(segs(p, "A")[0].node_id == "n1");
    CHECK(segs(p, "B")[0].node_id == "n2");
    CHECK(segs(p, "C")[0].node_id == "n1");
  }
  SUBCASE("one node") {
    const ClusterSpec c =
        cluster(nodes({1}), {model("A", {1}), model("B", {1}), model("C", {1})});
    for (const auto& a : place_round_robin(c).assignments) CHECK(a.segments[0].node_id == "n1");
  }
  SUBCASE("skip to the next feasible node") {
    // B needs 3 bytes; n2 only has 2.
    const ClusterSpec c = cluster(nodes({1, 1}, {10, 2}),
                                  {model("A", {1}), model("B", {1, 1, 1}), model("C", {1})});
    const PlacementPlan p = place_round_robin(c);
    CHECK(segs(p, "A")[0].node_id == "n1");
    CHECK(segs(p, "B")[0].node_id == "n1");
    CHECK(segs(p, "C")[0].node_id == "n2");
    CHECK(validate_plan(c, p).ok());
  }
  SUBCASE("a model that fits nowhere") {
    const ClusterSpec c = cluster(nodes({1, 1}, {2, 2}), {model("A", {1, 1, 1})});
    CHECK_THROWS_AS(place_round_robin(c), InfeasibleError);
  }
}

TEST_CASE("equal utilization") {
  SUBCASE("two equal nodes, two equal layers") {
    const ClusterSpec c = cluster(nodes({1, 1}), {model("m", {4, 4})});
    const PlacementPlan p = place_equal_utilization(c, unit_rates(c));
    CHECK(segs(p, "m") == std::vector<PlacedSegment>{{"n1", 0, 0}, {"n2", 1, 1}});
    const auto u = projected_utilization(c, p, unit_rates(c));
    CHECK(u[0] == u[1]);
    CHECK(u[0] == 4.0);
  }
  SUBCASE("one node equals single node") {
    const ClusterSpec c = cluster(nodes({3}), {model("a", {1, 2, 3}), model("b", {4})});
    CHECK(place_equal_utilization(c, unit_rates(c)).assignments ==
          place_single_node(c).assignments);
  }
  SUBCASE("heterogeneous speeds beat round robin") {
    const ClusterSpec c = cluster(nodes({1, 2}), {model("m", {3, 3, 3})});
    const RateMap r = unit_rates(c);
    const double eu = spread(projected_utilization(c, place_equal_utilization(c, r), r));
    const double rr = spread(projected_utilization(c, place_round_robin(c), r));
    CHECK(eu <= rr);
    // Oracle: the best contiguous two-way split, either orientation.
    double best = rr;
    const std::vector<double> costs{3, 3, 3};
    for (std::size_t cut = 1; cut < 3; ++cut) {
      double left = 0.0;
      for (std::size_t i = 0; i < cut; ++i) left += costs[i];
      const double right = 9.0 - left;
      best = std::min(best, std::abs(left / 1.0 - right / 2.0));
    }
    CHECK(best == 0.0);
    CHECK(eu == doctest::Approx(best));
  }
  SUBCASE("rates weight co-located workflows") {
    const ClusterSpec c = cluster(nodes({1, 1}), {model("a", {1}), model("b", {1})});
    RateMap r{{"wf-a", 10.0}, {"wf-b", 1.0}};
    const auto u = projected_utilization(c, place_equal_utilization(c, r), r);
    std::vector<double> sorted = u;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<double>{1.0, 10.0});
  }
  SUBCASE("missing rates") {
    const ClusterSpec c = cluster(nodes({1, 1}), {model("a", {1})});
    CHECK_THROWS_AS(place_equal_utilization(c, {}), ValidationError);
  }
}

TEST_CASE("max distribution") {
  SUBCASE("proportional to speed") {
    const ClusterSpec c = cluster(nodes({1, 3}), {model("m", {2, 2, 2, 2})});
    CHECK(segs(place_max_distribution(c), "m") ==
          std::vector<PlacedSegment>{{"n1", 0, 0}, {"n2", 1, 3}});
  }
  SUBCASE("symmetric") {
    const ClusterSpec c = cluster(nodes({1, 1}), {model("m", {5, 5})});
    CHECK(segs(place_max_distribution(c), "m") ==
          std::vector<PlacedSegment>{{"n1", 0, 0}, {"n2", 1, 1}});
  }
  SUBCASE("one node") {
    const ClusterSpec c = cluster(nodes({2}), {model("m", {1, 2, 3})});
    CHECK(segs(place_max_distribution(c), "m") == std::vector<PlacedSegment>{{"n1", 0, 2}});
  }
  SUBCASE("fewer layers than nodes") {
    const ClusterSpec c = cluster(nodes({1, 1, 1}), {model("m", {1, 1})});
    const PlacementPlan p = place_max_distribution(c);
    CHECK(segs(p, "m").size() == 2);
    CHECK(validate_plan(c, p).ok());
  }
  SUBCASE("memory infeasible") {
    const ClusterSpec c = cluster(nodes({1, 1}, {1, 1}), {model("m", {1, 1, 1, 1})});
    CHECK_THROWS_AS(place_max_distribution(c), InfeasibleError);
  }
}

TEST_CASE("validate_plan") {
  const ClusterSpec c = cluster(nodes({1, 1}, {10, 10}), {model("m", {1, 1, 1, 1}, 3.0)});
  PlacementPlan p{"hand", {{"m", {{"n1", 0, 2}, {"n2", 2, 3}}}}};
  CHECK(validate_plan(c, p).has("overlap"));

  p = {"hand", {{"m", {{"n1", 0, 3}}}}};
  CHECK(validate_plan(c, p).has("memory"));

  p = {"hand", {{"m", {{"n1", 0, 0}, {"n2", 2, 3}}}}};
  CHECK(validate_plan(c, p).has("gap"));

  p = {"hand", {{"m", {{"n1", 0, 1}}}}};
  CHECK(validate_plan(c, p).has("coverage"));

  p = {"hand", {{"m", {{"n9", 0, 1}, {"n2", 2, 3}}}}};
  CHECK(validate_plan(c, p).has("unknown_node"));

  p = {"hand", {}};
  CHECK(validate_plan(c, p).has("missing_model"));

  p = {"hand", {{"m", {{"n1", 0, 1}, {"n2", 2, 3}}}, {"zz", {{"n1", 0, 0}}}}};
  CHECK(validate_plan(c, p).has("unknown_model"));

  p = {"hand", {{"m", {{"n1", 0, 1}, {"n2", 2, 3}}}}};
  const ValidationReport ok = validate_plan(c, p);
  CHECK(ok.ok());
  CHECK(ok.violations.empty());
}

TEST_CASE("every strategy yields valid plans on random clusters") {
  std::mt19937_64 gen(20261014);
  std::uniform_real_distribution<double> speed(0.5, 4.0);
  std::uniform_real_distribution<double> cost(0.1, 5.0);
  std::uniform_int_distribution<int> n_nodes(1, 6);
  std::uniform_int_distribution<int> n_models(1, 4);
  std::uniform_int_distribution<int> n_layers(1, 12);
  int checked = 0;
  for (int trial = 0; trial < 600; ++trial) {
    std::vector<ModelProfile> ms;
    double total_mem = 0.0;
    for (int m = 0, k = n_models(gen); m < k; ++m) {
      std::vector<double> costs(static_cast<std::size_t>(n_layers(gen)));
      for (double& x : costs) x = cost(gen);
      ms.push_back(model("m" + std::to_string(m), costs, 1.0));
      total_mem += static_cast<double>(costs.size());
    }
    std::vector<double> speeds(static_cast<std::size_t>(n_nodes(gen)));
    for (double& s : speeds) s = speed(gen);
    // Every node can hold everything, so all strategies are feasible.
    const std::vector<double> mems(speeds.size(), total_mem);
    const ClusterSpec c = cluster(nodes(speeds, mems), ms);
    RateMap r;
    for (const auto& w : c.workflows()) r[w.id] = cost(gen);
    for (Strategy s : all_strategies()) {
      const PlacementPlan p = place(s, c, r);
      CHECK(p.strategy_name == strategy_name(s));
      const ValidationReport rep = validate_plan(c, p);
      CHECK_MESSAGE(rep.ok(), "trial ", trial, " strategy ", strategy_name(s));
      CHECK(place(s, c, r) == p);
    }
    ++checked;
  }
  CHECK(checked >= 500);
}

TEST_CASE("equal utilization balances one model on equal nodes") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> cost(0.1, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 6;
    std::vector<double> costs(4 + static_cast<std::size_t>(trial % 20));
    for (double& x : costs) x = cost(gen);
    const ClusterSpec c = cluster(nodes(std::vector<double>(n, 1.0)), {model("m", costs)});
    const RateMap r = unit_rates(c);
    const auto u = projected_utilization(c, place_equal_utilization(c, r), r);
    double total = 0.0;
    for (double x : costs) total += x;
    const double max_layer = *std::max_element(costs.begin(), costs.end());
    CHECK(*std::max_element(u.begin(), u.end()) <=
          total / static_cast<double>(n) + max_layer + 1e-9);
  }
}

TEST_CASE("projected utilization") {
  const ClusterSpec c = cluster(nodes({1, 2}), {model("m", {2, 4})});
  const PlacementPlan p{"hand", {{"m", {{"n1", 0, 0}, {"n2", 1, 1}}}}};
  RateMap r{{"wf-m", 0.5}};
  CHECK(projected_utilization(c, p, r) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("memory sums tolerate rounding") {
  // Capacity equal to the exact total, summed in a different order than the
  // strategies consume it.
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> mem(0.5, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ModelProfile> ms;
    for (int m = 0; m < 4; ++m) {
      ModelProfile p{"m" + std::to_string(m), {}};
      for (int l = 0; l < 5; ++l) p.layers.push_back({1.0, mem(gen), 1.0});
      ms.push_back(std::move(p));
    }
    double total = 0.0;
    for (auto it = ms.rbegin(); it != ms.rend(); ++it) {
      for (auto l = it->layers.rbegin(); l != it->layers.rend(); ++l) total += l->memory_footprint;
    }
    const ClusterSpec c = cluster(nodes({1.0}, {total}), ms);
    for (Strategy s : all_strategies()) {
      const PlacementPlan p = place(s, c, unit_rates(c));
      CHECK(validate_plan(c, p).ok());
    }
  }
}
