#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "adae/cluster_model.hpp"

namespace adae {

// Contiguous inclusive layer range [first, last] placed on one node.
struct PlacedSegment {
  std::string node_id;
  std::size_t first = 0;
  std::size_t last = 0;

  friend bool operator==(const PlacedSegment&, const PlacedSegment&) = default;
};

struct ModelAssignment {
  std::string model_id;
  std::vector<PlacedSegment> segments;  // in layer order

  friend bool operator==(const ModelAssignment&, const ModelAssignment&) = default;
};

struct PlacementPlan {
  std::string strategy_name;
  std::vector<ModelAssignment> assignments;  // cluster model order

  const ModelAssignment* find(std::string_view model_id) const;

  friend bool operator==(const PlacementPlan&, const PlacementPlan&) = default;
};

enum class Strategy { single_node, round_robin, equal_utilization, max_distribution };

std::string_view strategy_name(Strategy s);
// Accepts the names above (with '-' or '_'). Throws ValidationError.
Strategy parse_strategy(std::string_view name);
const std::vector<Strategy>& all_strategies();

// Workflow id -> expected requests/second.
using RateMap = std::map<std::string, double, std::less<>>;

// Every model on the first node (declaration order) with memory for all of
// them. Throws InfeasibleError otherwise.
PlacementPlan place_single_node(const ClusterSpec& cluster);

// Whole models assigned cyclically. A cursor walks the nodes in declaration
// order; a node without remaining memory for the model is skipped, and the
// cursor resumes after the node that took it.
PlacementPlan place_round_robin(const ClusterSpec& cluster);

// One greedy pass over the layers of all models (declaration order). Layer
// load = Σ rates of workflows using the model × layer cost. The current
// slice goes to the node with the lowest projected utilization (load /
// speed, ties to the lower index) and keeps taking layers while that node
// stays nearer the balanced level (total load / total speed) than it would
// be by stopping; a node without memory for the next layer also closes the
// slice. Slices on the same node merge. No backtracking.
PlacementPlan place_equal_utilization(const ClusterSpec& cluster, const RateMap& expected_rates);

// Each model split into N contiguous segments, segment k targeting
// speed_k / Σ speed of the model's cost; boundaries are snapped to the
// layer boundary with the least absolute deviation from the cumulative
// target, scanned in order. Empty segments are omitted.
PlacementPlan place_max_distribution(const ClusterSpec& cluster);

PlacementPlan place(Strategy strategy, const ClusterSpec& cluster, const RateMap& expected_rates);

struct PlanViolation {
  std::string kind;  // unknown_model, missing_model, unknown_node, empty, order, overlap, gap, coverage, memory
  std::string location;
  std::string detail;
};

struct ValidationReport {
  std::vector<PlanViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
  bool has(std::string_view kind) const;
};

ValidationReport validate_plan(const ClusterSpec& cluster, const PlacementPlan& plan);

// Per-node utilization (Σ rate × assigned cost / speed) the plan implies.
std::vector<double> projected_utilization(const ClusterSpec& cluster, const PlacementPlan& plan,
                                          const RateMap& expected_rates);

}  // namespace adae
