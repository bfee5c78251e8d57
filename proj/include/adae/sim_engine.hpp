#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adae/burst_model.hpp"
#include "adae/cluster_model.hpp"
#include "adae/placement.hpp"
#include "adae/trace_io.hpp"
#include "adae/workload_gen.hpp"

namespace adae {

struct SimConfig {
  ClusterSpec cluster;
  PlacementPlan plan;
  ArrivalTrace workload;
  std::uint64_t seed = 0;
  double warmup = 0.0;  // requests arriving before this are excluded from metrics
  bool drain = true;    // false: stop at workload.duration(), leaving residual requests
};

struct RequestRecord {
  double arrival = 0.0;
  double completion = 0.0;
  double latency = 0.0;
  double queue_wait = 0.0;  // total time spent waiting in node queues
  double service = 0.0;     // total service time
  std::size_t hops = 0;     // inter-node transfers (retransmissions not counted)
  std::size_t workflow = 0; // index into SimReport::workflow_ids
  bool met_slo = false;
};

struct WorkflowStats {
  std::string workflow_id;
  std::size_t requests = 0;
  double slo_latency = 0.0;
  double slo_attainment = 0.0;
  double p50 = 0.0, p95 = 0.0, p99 = 0.0;
  double mean_latency = 0.0;
  double throughput = 0.0;  // completed requests / measured seconds
};

struct NodeStats {
  std::string node_id;
  double utilization = 0.0;  // busy time / measured time
  std::size_t peak_queue = 0;  // max requests resident (waiting + in service)
};

struct Conservation {
  std::size_t injected = 0, completed = 0, residual = 0;
};

struct SimReport {
  std::vector<std::string> workflow_ids;
  std::vector<RequestRecord> per_request;  // completed, post-warmup, arrival order
  std::vector<WorkflowStats> per_workflow;
  WorkflowStats overall;                   // every workflow pooled
  std::vector<NodeStats> per_node;
  double utilization_variance = 0.0;       // population variance of per-node utilization
  double measured_time = 0.0;
  Conservation conservation;
};

// Discrete-event replay of the workload through the placed pipelines.
//
// Each node is one FIFO server with deterministic service time
// (Σ segment layer costs / node speed). A request visits its model's
// segments in layer order; a hand-off between distinct nodes costs
// attempts × (latency + payload / bandwidth), attempts ~ Geometric(1 - loss)
// drawn from the seeded generator. Same-node hand-offs are free but
// re-enter the node's queue.
SimReport run(const SimConfig& config);

// Linear-interpolated quantile of an ascending sample, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

// Per-request CSV: arrival,completion,latency,workflow,met_slo
std::string per_request_csv(const SimReport& report, const std::vector<std::string>& comments = {});

struct NamedWorkload {
  std::string name;
  std::variant<WorkloadMix, ArrivalTrace> source;
};

struct SweepAxes {
  std::vector<double> traffic_factors;     // normalized to the first node's service rate
  std::vector<double> link_latencies;      // one-way seconds
  std::vector<std::size_t> node_counts;    // first n nodes of the base cluster
  std::vector<Strategy> strategies;        // empty: keep base.plan
  std::vector<NamedWorkload> workloads;    // empty: base.workload
};

struct ScenarioDescriptor {
  std::size_t index = 0;
  std::string workload;
  std::optional<double> traffic;
  double link_latency = 0.0;
  std::size_t node_count = 0;
  std::string strategy;
};

struct SweepCell {
  ScenarioDescriptor scenario;
  std::uint64_t workload_seed = 0;
  std::uint64_t sim_seed = 0;
  bool ok = false;
  std::string error;
  std::optional<PlacementPlan> plan;
  std::optional<SimReport> report;
  std::optional<SegmentedRateModel> rate_profile;  // aggregate arrival-rate model of the cell
  double total_rate = 0.0;                         // mean offered requests / second
  RateMap offered_rates;                           // per workflow, requests / second
  std::optional<double> workload_cov;
  std::optional<ClusterSpec> cluster;
};

struct SweepOptions {
  double duration = 600.0;    // length of generated workloads
  unsigned threads = 0;       // 0: ADAE_THREADS or hardware concurrency
};

// Cartesian product of the axes; every cell simulated independently.
// Cells that cannot be planned or simulated are recorded with ok = false.
// Workload seeds depend only on (base seed, workload, traffic) so the
// strategies and network settings of one workload see the same arrivals;
// the simulation seed is base seed + cell index.
std::vector<SweepCell> sweep(const SimConfig& base, const SweepAxes& axes, const SweepOptions& options = {});

// Per-workflow mix recovered from a trace: one component per workflow id,
// share = event fraction, source = fitted rate model of that workflow.
WorkloadMix mix_from_trace(const ArrivalTrace& trace);

// Mean service time of one request of the mix on `node` with the whole
// model resident there.
double reference_service_time(const ClusterSpec& cluster, const WorkloadMix& mix, const NodeSpec& node);

// Highest traffic factor among cells matching the predicate whose
// attainment (for `workflow`, or pooled when empty) reaches `target`;
// 0 when none does.
template <typename Pred>
double max_sustainable_traffic(const std::vector<SweepCell>& cells, Pred&& pred, const std::string& workflow,
                               double target);

unsigned default_thread_count();

inline double cell_attainment(const SweepCell& c, const std::string& workflow) {
  if (!c.ok || !c.report) return 0.0;
  if (workflow.empty()) return c.report->overall.slo_attainment;
  for (const auto& w : c.report->per_workflow) {
    if (w.workflow_id == workflow) return w.slo_attainment;
  }
  return 0.0;
}

template <typename Pred>
double max_sustainable_traffic(const std::vector<SweepCell>& cells, Pred&& pred, const std::string& workflow,
                               double target) {
  double best = 0.0;
  for (const auto& c : cells) {
    if (!c.scenario.traffic || !pred(c)) continue;
    if (cell_attainment(c, workflow) >= target) best = std::max(best, *c.scenario.traffic);
  }
  return best;
}

}  // namespace adae
