#include "adae/placement.hpp"

#include <algorithm>
#include <cmath>

#include "adae/error.hpp"
#include "adae/hash.hpp"

namespace adae {

const ModelAssignment* PlacementPlan::find(std::string_view model_id) const {
  for (const auto& a : assignments) if (a.model_id == model_id) return &a;
  return nullptr;
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::single_node: return "single_node";
    case Strategy::round_robin: return "round_robin";
    case Strategy::equal_utilization: return "equal_utilization";
    case Strategy::max_distribution: return "max_distribution";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  for (Strategy s : all_strategies()) if (strategy_name(s) == n) return s;
  throw ValidationError("unknown placement strategy '" + std::string(name) + "'", "strategy");
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = {Strategy::single_node, Strategy::round_robin,
                                            Strategy::equal_utilization, Strategy::max_distribution};
  return all;
}

namespace {

// Memory comparisons allow for rounding in running sums of footprints.
constexpr double kMemorySlack = 1e-9;

bool fits(double need, double free, double capacity) { return need <= free + kMemorySlack * capacity; }

ModelAssignment whole(const ModelProfile& m, const std::string& node) {
  return {m.id, {{node, 0, m.layers.size() - 1}}};
}

}  // namespace

PlacementPlan place_single_node(const ClusterSpec& cluster) {
  double required = 0.0;
  for (const auto& m : cluster.models()) required += m.total_memory();
  for (const auto& n : cluster.nodes()) {
    if (fits(required, n.memory_capacity, n.memory_capacity)) {
      PlacementPlan plan{std::string(strategy_name(Strategy::single_node)), {}};
      for (const auto& m : cluster.models()) plan.assignments.push_back(whole(m, n.id));
      return plan;
    }
  }
  std::string caps;
  for (const auto& n : cluster.nodes()) caps += (caps.empty() ? "" : ", ") + n.id + "=" + format_double(n.memory_capacity);
  throw InfeasibleError("no single node holds all models: need " + format_double(required) +
                        " bytes, capacities " + caps);
}

PlacementPlan place_round_robin(const ClusterSpec& cluster) {
  const auto& nodes = cluster.nodes();
  std::vector<double> free_mem;
  for (const auto& n : nodes) free_mem.push_back(n.memory_capacity);
  PlacementPlan plan{std::string(strategy_name(Strategy::round_robin)), {}};
  std::size_t cursor = 0;
  for (const auto& m : cluster.models()) {
    const double need = m.total_memory();
    bool placed = false;
    for (std::size_t step = 0; step < nodes.size(); ++step) {
      const std::size_t k = (cursor + step) % nodes.size();
      if (fits(need, free_mem[k], nodes[k].memory_capacity)) {
        free_mem[k] -= need;
        plan.assignments.push_back(whole(m, nodes[k].id));
        cursor = (k + 1) % nodes.size();
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw InfeasibleError("model '" + m.id + "' (" + format_double(need) +
                            " bytes) fits on no node's remaining memory");
    }
  }
  return plan;
}

PlacementPlan place_equal_utilization(const ClusterSpec& cluster, const RateMap& expected_rates) {
  const auto& nodes = cluster.nodes();
  const auto& models = cluster.models();

  std::vector<double> model_rate(models.size(), 0.0);
  for (const auto& w : cluster.workflows()) {
    const auto it = expected_rates.find(w.id);
    if (it == expected_rates.end()) {
      throw ValidationError("no expected rate for workflow '" + w.id + "'", "expected_rates");
    }
    if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
      throw ValidationError("expected rate must be finite and non-negative", "expected_rates." + w.id);
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (models[m].id == w.model_id) model_rate[m] += it->second;
    }
  }

  double total_load = 0.0, total_speed = 0.0;
  for (std::size_t m = 0; m < models.size(); ++m) total_load += model_rate[m] * models[m].total_cost();
  for (const auto& n : nodes) total_speed += n.compute_speed;
  const double balanced = total_load / total_speed;

  std::vector<double> util(nodes.size(), 0.0);
  std::vector<double> free_mem;
  for (const auto& n : nodes) free_mem.push_back(n.memory_capacity);

  auto lowest_with_room = [&](double mem) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (!fits(mem, free_mem[k], nodes[k].memory_capacity)) continue;
      if (!best || util[k] < util[*best]) best = k;
    }
    return best;
  };

  PlacementPlan plan{std::string(strategy_name(Strategy::equal_utilization)), {}};
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& model = models[m];
    ModelAssignment a{model.id, {}};
    std::optional<std::size_t> cur;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      const auto& layer = model.layers[i];
      const double load = model_rate[m] * layer.compute_cost;
      bool stay = false;
      if (cur && fits(layer.memory_footprint, free_mem[*cur], nodes[*cur].memory_capacity)) {
        const double now = util[*cur];
        const double after = now + load / nodes[*cur].compute_speed;
        stay = after <= balanced || (after - balanced) < (balanced - now);
      }
      if (!stay) {
        const auto target = lowest_with_room(layer.memory_footprint);
        if (!target) {
          throw InfeasibleError("equal utilization: no node has memory for layer " + std::to_string(i) +
                                " of model '" + model.id + "'");
        }
        if (!cur || *target != *cur) {
          a.segments.push_back({nodes[*target].id, i, i});
          cur = target;
        }
      }
      a.segments.back().last = i;
      util[*cur] += load / nodes[*cur].compute_speed;
      free_mem[*cur] -= layer.memory_footprint;
    }
    plan.assignments.push_back(std::move(a));
  }
  return plan;
}

PlacementPlan place_max_distribution(const ClusterSpec& cluster) {
  const auto& nodes = cluster.nodes();
  double total_speed = 0.0;
  for (const auto& n : nodes) total_speed += n.compute_speed;

  PlacementPlan plan{std::string(strategy_name(Strategy::max_distribution)), {}};
  std::vector<double> used(nodes.size(), 0.0);
  for (const auto& model : cluster.models()) {
    const std::size_t L = model.layers.size();
    std::vector<double> cum(L + 1, 0.0);
    for (std::size_t j = 0; j < L; ++j) cum[j + 1] = cum[j] + model.layers[j].compute_cost;
    const double total = cum[L];

    std::vector<std::size_t> bounds{0};
    double speed_prefix = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      speed_prefix += nodes[k].compute_speed;
      const double target = total * speed_prefix / total_speed;
      std::size_t best = bounds.back();
      for (std::size_t j = bounds.back(); j <= L; ++j) {
        if (std::fabs(cum[j] - target) < std::fabs(cum[best] - target)) best = j;
      }
      bounds.push_back(best);
    }
    bounds.push_back(L);

    ModelAssignment a{model.id, {}};
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (bounds[k] == bounds[k + 1]) continue;
      a.segments.push_back({nodes[k].id, bounds[k], bounds[k + 1] - 1});
      used[k] += model.range_memory(bounds[k], bounds[k + 1] - 1);
    }
    plan.assignments.push_back(std::move(a));
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!fits(used[k], nodes[k].memory_capacity, nodes[k].memory_capacity)) {
      throw InfeasibleError("max distribution: node '" + nodes[k].id + "' needs " + format_double(used[k]) +
                            " bytes, has " + format_double(nodes[k].memory_capacity));
    }
  }
  return plan;
}

PlacementPlan place(Strategy strategy, const ClusterSpec& cluster, const RateMap& expected_rates) {
  switch (strategy) {
    case Strategy::single_node: return place_single_node(cluster);
    case Strategy::round_robin: return place_round_robin(cluster);
    case Strategy::equal_utilization: return place_equal_utilization(cluster, expected_rates);
    case Strategy::max_distribution: return place_max_distribution(cluster);
  }
  throw ValidationError("unknown strategy");
}

bool ValidationReport::has(std::string_view kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const PlanViolation& v) { return v.kind == kind; });
}

ValidationReport validate_plan(const ClusterSpec& cluster, const PlacementPlan& plan) {
  ValidationReport report;
  auto add = [&](std::string kind, std::string loc, std::string detail) {
    report.violations.push_back({std::move(kind), std::move(loc), std::move(detail)});
  };
  std::vector<double> used(cluster.nodes().size(), 0.0);
  std::map<std::string, int, std::less<>> seen;

  for (std::size_t a = 0; a < plan.assignments.size(); ++a) {
    const auto& asg = plan.assignments[a];
    const std::string loc = "assignments[" + std::to_string(a) + "]";
    const ModelProfile* model = cluster.find_model(asg.model_id);
    if (!model) {
      add("unknown_model", loc, "model '" + asg.model_id + "' not in cluster");
      continue;
    }
    if (++seen[asg.model_id] > 1) {
      add("overlap", loc, "model '" + asg.model_id + "' assigned more than once");
      continue;
    }
    const std::size_t L = model->layers.size();
    std::size_t next = 0;
    for (std::size_t s = 0; s < asg.segments.size(); ++s) {
      const auto& seg = asg.segments[s];
      const std::string sloc = loc + ".segments[" + std::to_string(s) + "]";
      const auto node = cluster.node_index(seg.node_id);
      if (!node) add("unknown_node", sloc, "node '" + seg.node_id + "' not in cluster");
      if (seg.first > seg.last) {
        add("empty", sloc, "first > last");
        continue;
      }
      if (seg.last >= L) {
        add("coverage", sloc, "layer " + std::to_string(seg.last) + " beyond model end");
        continue;
      }
      if (seg.first < next) {
        if (s > 0 && seg.first < asg.segments[s - 1].first) {
          add("order", sloc, "segment precedes its predecessor");
        } else {
          add("overlap", sloc, "layers " + std::to_string(seg.first) + ".." + std::to_string(next - 1) +
                                   " assigned twice");
        }
      } else if (seg.first > next) {
        add("gap", sloc, "layers " + std::to_string(next) + ".." + std::to_string(seg.first - 1) +
                             " unassigned");
      }
      next = std::max(next, seg.last + 1);
      if (node) used[*node] += model->range_memory(seg.first, seg.last);
    }
    if (next < L) {
      add("coverage", loc, "layers " + std::to_string(next) + ".." + std::to_string(L - 1) + " unassigned");
    }
  }
  for (const auto& m : cluster.models()) {
    if (!seen.count(m.id)) add("missing_model", "plan", "model '" + m.id + "' not placed");
  }
  for (std::size_t k = 0; k < cluster.nodes().size(); ++k) {
    const auto& n = cluster.nodes()[k];
    if (!fits(used[k], n.memory_capacity, n.memory_capacity)) {
      add("memory", "node '" + n.id + "'",
          "assigned " + format_double(used[k]) + " bytes exceeds capacity " + format_double(n.memory_capacity));
    }
  }
  return report;
}

std::vector<double> projected_utilization(const ClusterSpec& cluster, const PlacementPlan& plan,
                                          const RateMap& expected_rates) {
  std::vector<double> util(cluster.nodes().size(), 0.0);
  for (const auto& w : cluster.workflows()) {
    const auto it = expected_rates.find(w.id);
    if (it == expected_rates.end()) continue;
    const ModelProfile* model = cluster.find_model(w.model_id);
    const ModelAssignment* a = plan.find(w.model_id);
    if (!model || !a) continue;
    for (const auto& seg : a->segments) {
      const auto k = cluster.node_index(seg.node_id);
      if (!k) continue;
      util[*k] += it->second * model->range_cost(seg.first, seg.last) / cluster.nodes()[*k].compute_speed;
    }
  }
  return util;
}

}  // namespace adae
