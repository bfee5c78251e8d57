#include "adae/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <map>
#include <queue>
#include <thread>

#include "adae/error.hpp"
#include "adae/hash.hpp"
#include "adae/kernels.hpp"
#include "adae/rng.hpp"

namespace adae {

namespace {

struct Stage {
  std::size_t node;
  double service;
  double payload;  // bytes emitted to the next stage
};

struct Route {
  std::vector<Stage> stages;
  double slo = 0.0;
};

enum class EventKind : std::uint8_t { enqueue, service_done };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;
  std::size_t request;
  std::size_t stage;
  std::size_t node;

  bool operator>(const Event& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

struct Job {
  std::size_t request;
  std::size_t stage;
  double enqueued;
};

struct NodeState {
  std::deque<Job> waiting;
  bool busy = false;
  Job current{};
  std::size_t resident = 0;
  std::size_t peak = 0;
  double busy_time = 0.0;
};

struct InFlight {
  double arrival = 0.0;
  double queue_wait = 0.0;
  double service = 0.0;
  std::size_t hops = 0;
  std::size_t workflow = 0;
  bool done = false;
  double completion = 0.0;
};

WorkflowStats summarize(const std::string& id, double slo, std::vector<double> latencies,
                        std::size_t met, double measured) {
  WorkflowStats s;
  s.workflow_id = id;
  s.slo_latency = slo;
  s.requests = latencies.size();
  if (latencies.empty()) return s;
  s.slo_attainment = static_cast<double>(met) / static_cast<double>(latencies.size());
  s.mean_latency = kernels::sum(latencies) / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  s.p50 = quantile_sorted(latencies, 0.50);
  s.p95 = quantile_sorted(latencies, 0.95);
  s.p99 = quantile_sorted(latencies, 0.99);
  s.throughput = measured > 0.0 ? static_cast<double>(latencies.size()) / measured : 0.0;
  return s;
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

SimReport run(const SimConfig& config) {
  const ClusterSpec& cluster = config.cluster;
  const ArrivalTrace& trace = config.workload;
  if (!(config.warmup >= 0.0) || config.warmup >= trace.duration()) {
    throw ValidationError("warmup must lie in [0, workload duration)", "warmup");
  }
  const auto check = validate_plan(cluster, config.plan);
  if (!check.ok()) {
    const auto& v = check.violations.front();
    throw ValidationError("invalid plan (" + v.kind + " at " + v.location + "): " + v.detail, "plan");
  }

  // Workflow ids in first-appearance order of the cluster declaration.
  SimReport report;
  std::map<std::string, std::size_t, std::less<>> wf_index;
  std::vector<Route> routes;
  for (const auto& e : trace.events()) {
    if (wf_index.count(e.workflow_id)) continue;
    const WorkflowSpec* w = cluster.find_workflow(e.workflow_id);
    if (!w) throw ValidationError("workflow '" + e.workflow_id + "' is not defined in the cluster", "workload");
    const ModelProfile* model = cluster.find_model(w->model_id);
    const ModelAssignment* a = config.plan.find(w->model_id);
    if (!model || !a) {
      throw ValidationError("workflow '" + e.workflow_id + "' has no placed model", "plan");
    }
    Route r;
    r.slo = w->slo_latency;
    for (const auto& seg : a->segments) {
      const std::size_t n = *cluster.node_index(seg.node_id);
      r.stages.push_back({n, model->range_cost(seg.first, seg.last) / cluster.nodes()[n].compute_speed,
                          model->layers[seg.last].output_payload});
    }
    wf_index.emplace(e.workflow_id, routes.size());
    report.workflow_ids.push_back(e.workflow_id);
    routes.push_back(std::move(r));
  }

  const double horizon = config.drain ? std::numeric_limits<double>::infinity() : trace.duration();
  const double warmup = config.warmup;
  const auto& link = cluster.link();
  Rng rng(config.seed);

  std::vector<NodeState> nodes(cluster.nodes().size());
  std::vector<InFlight> requests(trace.size());
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t seq = 0;
  std::size_t next_arrival = 0;
  std::size_t completed = 0;
  double last_time = 0.0;

  auto start_service = [&](std::size_t n, const Job& job, double now) {
    NodeState& node = nodes[n];
    const Stage& st = routes[requests[job.request].workflow].stages[job.stage];
    node.busy = true;
    node.current = job;
    requests[job.request].queue_wait += now - job.enqueued;
    requests[job.request].service += st.service;
    const double end = now + st.service;
    const double lo = std::max(now, warmup), hi = std::min(end, horizon);
    if (hi > lo) node.busy_time += hi - lo;
    queue.push({end, seq++, EventKind::service_done, job.request, job.stage, n});
  };

  auto enqueue = [&](std::size_t req, std::size_t stage, double now) {
    const std::size_t n = routes[requests[req].workflow].stages[stage].node;
    NodeState& node = nodes[n];
    node.peak = std::max(node.peak, ++node.resident);
    const Job job{req, stage, now};
    if (!node.busy) start_service(n, job, now);
    else node.waiting.push_back(job);
  };

  const auto& events = trace.events();
  for (;;) {
    const bool have_arrival = next_arrival < events.size();
    if (!have_arrival && queue.empty()) break;
    const bool take_arrival =
        have_arrival && (queue.empty() || events[next_arrival].time <= queue.top().time);
    const double now = take_arrival ? events[next_arrival].time : queue.top().time;
    if (now > horizon) break;
    last_time = std::max(last_time, now);

    if (take_arrival) {
      const std::size_t r = next_arrival++;
      requests[r].arrival = now;
      requests[r].workflow = wf_index.find(events[r].workflow_id)->second;
      enqueue(r, 0, now);
      continue;
    }

    const Event ev = queue.top();
    queue.pop();
    if (ev.kind == EventKind::enqueue) {
      enqueue(ev.request, ev.stage, now);
      continue;
    }

    NodeState& node = nodes[ev.node];
    --node.resident;
    node.busy = false;
    InFlight& req = requests[ev.request];
    const Route& route = routes[req.workflow];
    if (ev.stage + 1 == route.stages.size()) {
      req.done = true;
      req.completion = now;
      ++completed;
    } else {
      const Stage& cur = route.stages[ev.stage];
      const Stage& nxt = route.stages[ev.stage + 1];
      double delay = 0.0;
      if (nxt.node != cur.node) {
        const std::uint64_t attempts = rng.attempts_until_success(link.loss_probability);
        delay = static_cast<double>(attempts) * link.hop_delay(cur.payload);
        ++req.hops;
      }
      queue.push({now + delay, seq++, EventKind::enqueue, ev.request, ev.stage + 1, ev.node});
    }
    if (!node.waiting.empty()) {
      const Job job = node.waiting.front();
      node.waiting.pop_front();
      start_service(ev.node, job, now);
    }
  }

  const double end_time = config.drain ? std::max(trace.duration(), last_time) : trace.duration();
  report.measured_time = end_time - warmup;

  report.conservation.injected = next_arrival;
  report.conservation.completed = completed;
  report.conservation.residual = next_arrival - completed;

  const std::size_t W = routes.size();
  std::vector<std::vector<double>> lat(W);
  std::vector<std::size_t> met(W, 0);
  std::vector<double> all;
  std::size_t all_met = 0;
  for (std::size_t r = 0; r < next_arrival; ++r) {
    const InFlight& q = requests[r];
    if (!q.done || q.arrival < warmup) continue;
    RequestRecord rec;
    rec.arrival = q.arrival;
    rec.completion = q.completion;
    rec.latency = q.completion - q.arrival;
    rec.queue_wait = q.queue_wait;
    rec.service = q.service;
    rec.hops = q.hops;
    rec.workflow = q.workflow;
    rec.met_slo = rec.latency <= routes[q.workflow].slo;
    lat[q.workflow].push_back(rec.latency);
    all.push_back(rec.latency);
    if (rec.met_slo) {
      ++met[q.workflow];
      ++all_met;
    }
    report.per_request.push_back(rec);
  }
  for (std::size_t w = 0; w < W; ++w) {
    report.per_workflow.push_back(
        summarize(report.workflow_ids[w], routes[w].slo, std::move(lat[w]), met[w], report.measured_time));
  }
  report.overall = summarize("*", 0.0, std::move(all), all_met, report.measured_time);

  std::vector<double> utils;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    NodeStats s;
    s.node_id = cluster.nodes()[n].id;
    s.utilization = report.measured_time > 0.0 ? std::min(1.0, nodes[n].busy_time / report.measured_time) : 0.0;
    s.peak_queue = nodes[n].peak;
    utils.push_back(s.utilization);
    report.per_node.push_back(std::move(s));
  }
  const double mean_u = kernels::sum(utils) / static_cast<double>(utils.size());
  report.utilization_variance = kernels::sum_sq_dev(utils, mean_u) / static_cast<double>(utils.size());
  return report;
}

std::string per_request_csv(const SimReport& report, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "arrival,completion,latency,workflow,met_slo\n";
  for (const auto& r : report.per_request) {
    out += format_double(r.arrival) + "," + format_double(r.completion) + "," + format_double(r.latency) + "," +
           report.workflow_ids[r.workflow] + "," + (r.met_slo ? "1" : "0") + "\n";
  }
  return out;
}

WorkloadMix mix_from_trace(const ArrivalTrace& trace) {
  if (trace.empty()) throw ValidationError("cannot derive a mix from an empty trace", "workload");
  std::vector<std::string> order;
  std::map<std::string, std::vector<ArrivalEvent>, std::less<>> by_wf;
  for (const auto& e : trace.events()) {
    auto& v = by_wf[e.workflow_id];
    if (v.empty()) order.push_back(e.workflow_id);
    v.push_back(e);
  }
  WorkloadMix m;
  for (const auto& id : order) {
    auto& evs = by_wf[id];
    const double share = static_cast<double>(evs.size()) / static_cast<double>(trace.size());
    ArrivalTrace part(std::move(evs), trace.duration());
    m.components.push_back({detect_change_points(part), share, id, id});
  }
  // Re-normalize so shares sum to exactly 1 for validate().
  double total = 0.0;
  for (const auto& c : m.components) total += c.share;
  for (auto& c : m.components) c.share /= total;
  return m;
}

double reference_service_time(const ClusterSpec& cluster, const WorkloadMix& mix, const NodeSpec& node) {
  double t = 0.0;
  for (const auto& c : mix.components) {
    const WorkflowSpec* w = cluster.find_workflow(c.workflow_id);
    if (!w) throw ValidationError("workflow '" + c.workflow_id + "' is not defined in the cluster", "workloads");
    t += c.share * cluster.find_model(w->model_id)->total_cost() / node.compute_speed;
  }
  return t;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("ADAE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

namespace {

struct CellPlan {
  ScenarioDescriptor scenario;
  std::size_t workload_index;  // into axes.workloads, or npos for base
  std::optional<std::size_t> traffic_index;
};

void run_cell(const SimConfig& base, const SweepAxes& axes, const SweepOptions& options, const CellPlan& cp,
              SweepCell& cell) {
  cell.scenario = cp.scenario;
  const std::uint64_t wl_stream = (cp.workload_index + 1) * 1000003ULL + (cp.traffic_index ? *cp.traffic_index + 1 : 0);
  cell.workload_seed = mix_seed(base.seed, wl_stream);
  cell.sim_seed = base.seed + cp.scenario.index;
  try {
    ClusterSpec cluster = base.cluster;
    if (!axes.node_counts.empty()) cluster = cluster.with_node_count(cp.scenario.node_count);
    if (!axes.link_latencies.empty()) cluster = cluster.with_link_latency(cp.scenario.link_latency);

    const ArrivalTrace* fixed = nullptr;
    const WorkloadMix* mixp = nullptr;
    WorkloadMix derived;
    if (cp.workload_index != static_cast<std::size_t>(-1)) {
      const auto& src = axes.workloads[cp.workload_index].source;
      if (std::holds_alternative<WorkloadMix>(src)) mixp = &std::get<WorkloadMix>(src);
      else fixed = &std::get<ArrivalTrace>(src);
    } else {
      fixed = &base.workload;
    }

    std::optional<ArrivalTrace> generated;
    if (cp.scenario.traffic) {
      if (!mixp) {
        derived = mix_from_trace(*fixed);
        mixp = &derived;
      }
      const double ref = reference_service_time(base.cluster, *mixp, base.cluster.nodes().front());
      const double total_rate = *cp.scenario.traffic / ref;
      generated = mix(*mixp, total_rate, options.duration, cell.workload_seed);
      SegmentedRateModel profile = component_rate_model(mixp->components.front(), total_rate, options.duration);
      for (std::size_t i = 1; i < mixp->components.size(); ++i) {
        profile = add_models(profile, component_rate_model(mixp->components[i], total_rate, options.duration));
      }
      cell.rate_profile = profile;
    } else if (mixp) {
      throw ValidationError("a generated workload needs a traffic axis", "axes.traffic_factors");
    } else {
      generated = *fixed;
      cell.rate_profile = detect_change_points(*fixed);
    }
    const ArrivalTrace& trace = *generated;
    cell.total_rate = static_cast<double>(trace.size()) / trace.duration();
    if (trace.size() >= 3) {
      try {
        cell.workload_cov = coefficient_of_variation(trace).cov;
      } catch (const Error&) {
      }
    }

    RateMap rates;
    for (const auto& w : cluster.workflows()) rates[w.id] = 0.0;
    for (const auto& e : trace.events()) rates[e.workflow_id] += 1.0;
    for (auto& [id, v] : rates) v /= trace.duration();
    cell.offered_rates = rates;

    PlacementPlan plan = base.plan;
    if (!axes.strategies.empty()) plan = place(parse_strategy(cp.scenario.strategy), cluster, rates);
    SimConfig cfg{cluster, plan, trace, cell.sim_seed, base.warmup, base.drain};
    cell.report = run(cfg);
    cell.plan = std::move(plan);
    cell.cluster = std::move(cluster);
    cell.ok = true;
  } catch (const Error& e) {
    cell.ok = false;
    cell.error = e.what();
    cell.report.reset();
  }
}

}  // namespace

std::vector<SweepCell> sweep(const SimConfig& base, const SweepAxes& axes, const SweepOptions& options) {
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> wl_idx;
  if (axes.workloads.empty()) wl_idx.push_back(npos);
  for (std::size_t i = 0; i < axes.workloads.size(); ++i) wl_idx.push_back(i);
  std::vector<std::optional<std::size_t>> tr_idx;
  if (axes.traffic_factors.empty()) tr_idx.push_back(std::nullopt);
  for (std::size_t i = 0; i < axes.traffic_factors.size(); ++i) tr_idx.push_back(i);
  std::vector<double> lats = axes.link_latencies;
  if (lats.empty()) lats.push_back(base.cluster.link().one_way_latency);
  std::vector<std::size_t> counts = axes.node_counts;
  if (counts.empty()) counts.push_back(base.cluster.nodes().size());
  std::vector<std::string> strats;
  for (Strategy s : axes.strategies) strats.emplace_back(strategy_name(s));
  if (strats.empty()) strats.push_back(base.plan.strategy_name);

  std::vector<CellPlan> plans;
  for (auto w : wl_idx)
    for (const auto& t : tr_idx)
      for (double lat : lats)
        for (auto n : counts)
          for (const auto& s : strats) {
            CellPlan cp;
            cp.scenario.index = plans.size();
            cp.scenario.workload = w == npos ? "base" : axes.workloads[w].name;
            if (t) cp.scenario.traffic = axes.traffic_factors[*t];
            cp.scenario.link_latency = lat;
            cp.scenario.node_count = n;
            cp.scenario.strategy = s;
            cp.workload_index = w;
            cp.traffic_index = t;
            plans.push_back(std::move(cp));
          }

  std::vector<SweepCell> cells(plans.size());
  const unsigned threads =
      std::max(1u, std::min<unsigned>(options.threads ? options.threads : default_thread_count(),
                                      static_cast<unsigned>(plans.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plans.size(); i = next++) run_cell(base, axes, options, plans[i], cells[i]);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return cells;
}

}  // namespace adae
