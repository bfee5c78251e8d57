#include "adae/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>

#include "adae/error.hpp"
#include "adae/hash.hpp"
#include "adae/rng.hpp"
#include "adae/version.hpp"

namespace adae {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

template <typename T>
T get_or(const ojson& j, const char* key, T fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("wrong type", path + key);
  }
}

std::string require_string(const ojson& j, const char* key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_string()) throw ValidationError("missing string", path + key);
  return j.at(key).get<std::string>();
}

template <typename T>
std::vector<T> number_list(const ojson& axes, const char* key, const std::string& path) {
  std::vector<T> out;
  if (!axes.contains(key)) return out;
  const ojson& a = axes.at(key);
  if (!a.is_array()) throw ValidationError("expected an array", path + key);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ValidationError("expected a number", path + key + "[" + std::to_string(i) + "]");
    if constexpr (std::is_integral_v<T>) {
      if (!a[i].is_number_integer() || a[i].get<long long>() < 1) {
        throw ValidationError("expected a positive integer", path + key + "[" + std::to_string(i) + "]");
      }
    }
    out.push_back(a[i].get<T>());
  }
  return out;
}

struct Loader {
  std::string base_dir;
  std::vector<InputFile>& inputs;

  std::string read(const std::string& role, const std::string& rel) {
    const std::string p = resolve(base_dir, rel);
    if (!fs::exists(p)) throw ValidationError("referenced file does not exist: " + rel, role);
    std::string text = read_text_file(p);
    inputs.push_back({role, rel, content_hash(text)});
    return text;
  }

  ArrivalTrace trace(const std::string& role, const std::string& rel) {
    return parse_trace(read(role, rel));
  }
};

ArrivalTrace relabel(const ArrivalTrace& t, const std::string& workflow_id) {
  std::vector<ArrivalEvent> ev = t.events();
  for (auto& e : ev) e.workflow_id = workflow_id;
  return ArrivalTrace(std::move(ev), t.duration(), t.epoch());
}

}  // namespace

ExperimentManifest parse_manifest(std::string_view raw, const std::string& base_dir) {
  ojson j;
  try {
    j = ojson::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("manifest must be a JSON object");
  if (get_or<int>(j, "schema_version", kManifestSchemaVersion, "") != kManifestSchemaVersion) {
    throw ValidationError("unsupported schema version", "schema_version");
  }

  std::vector<InputFile> inputs;
  Loader load{base_dir, inputs};
  const std::string cluster_path = require_string(j, "cluster", "");
  ClusterSpec cluster = load_cluster_config(load.read("cluster", cluster_path));

  ExperimentManifest m{get_or<std::string>(j, "name", "experiment", ""), cluster, 0, 600.0, 0.0, true, false, {}, {}, {}};
  m.seed = get_or<std::uint64_t>(j, "seed", 0, "");
  m.duration = get_or<double>(j, "duration", 600.0, "");
  m.warmup = get_or<double>(j, "warmup", 0.0, "");
  m.drain = get_or<bool>(j, "drain", true, "");
  m.write_requests = get_or<bool>(j, "write_requests", false, "");
  if (!(m.duration > 0.0) || !std::isfinite(m.duration)) throw ValidationError("must be positive", "duration");
  if (!(m.warmup >= 0.0) || m.warmup >= m.duration) throw ValidationError("must lie in [0, duration)", "warmup");
  if (j.contains("output_dir")) m.output_dir = resolve(base_dir, require_string(j, "output_dir", ""));

  if (j.contains("strategies")) {
    const ojson& s = j.at("strategies");
    if (!s.is_array()) throw ValidationError("expected an array", "strategies");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_string()) throw ValidationError("expected a name", "strategies[" + std::to_string(i) + "]");
      m.axes.strategies.push_back(parse_strategy(s[i].get<std::string>()));
    }
  }
  if (m.axes.strategies.empty()) m.axes.strategies.push_back(Strategy::equal_utilization);

  if (j.contains("axes")) {
    const ojson& a = j.at("axes");
    if (!a.is_object()) throw ValidationError("expected an object", "axes");
    for (const auto& [k, v] : a.items()) {
      if (k != "traffic" && k != "link_latency" && k != "node_count") throw ValidationError("unknown axis", "axes." + k);
    }
    m.axes.traffic_factors = number_list<double>(a, "traffic", "axes.");
    m.axes.link_latencies = number_list<double>(a, "link_latency", "axes.");
    m.axes.node_counts = number_list<std::size_t>(a, "node_count", "axes.");
    for (double t : m.axes.traffic_factors) {
      if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("traffic must be positive", "axes.traffic");
    }
    for (double l : m.axes.link_latencies) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("latency must be >= 0", "axes.link_latency");
    }
    for (std::size_t n : m.axes.node_counts) {
      if (n > cluster.nodes().size()) {
        throw ValidationError("node count exceeds the cluster's " + std::to_string(cluster.nodes().size()) + " nodes",
                              "axes.node_count");
      }
    }
  }

  if (!j.contains("workloads") || !j.at("workloads").is_array() || j.at("workloads").empty()) {
    throw ValidationError("at least one workload is required", "workloads");
  }
  const ojson& wls = j.at("workloads");
  for (std::size_t i = 0; i < wls.size(); ++i) {
    const std::string path = "workloads[" + std::to_string(i) + "].";
    const ojson& w = wls[i];
    if (!w.is_object()) throw ValidationError("expected an object", path);
    NamedWorkload nw{get_or<std::string>(w, "name", "workload" + std::to_string(i), path),
                     WorkloadMix{}};
    if (w.contains("components")) {
      if (w.contains("trace")) throw ValidationError("give either components or trace", path + "trace");
      if (m.axes.traffic_factors.empty()) {
        throw ValidationError("generated workloads need a traffic axis", path + "components");
      }
      WorkloadMix mix;
      const ojson& cs = w.at("components");
      if (!cs.is_array() || cs.empty()) throw ValidationError("expected a non-empty array", path + "components");
      for (std::size_t c = 0; c < cs.size(); ++c) {
        const std::string cp = path + "components[" + std::to_string(c) + "].";
        const ojson& comp = cs[c];
        MixComponent mc{SegmentedRateModel::constant(1.0, 1.0)};
        mc.share = get_or<double>(comp, "share", 1.0, cp);
        mc.workflow_id = require_string(comp, "workflow_id", cp);
        mc.source_id = get_or<std::string>(comp, "source_id", mc.workflow_id, cp);
        if (!cluster.find_workflow(mc.workflow_id)) throw ValidationError("unknown workflow", cp + "workflow_id");
        if (comp.contains("rate_model") == comp.contains("trace")) {
          throw ValidationError("give exactly one of rate_model or trace", cp + "rate_model");
        }
        if (comp.contains("rate_model")) {
          mc.source = rate_model_from_json(load.read(cp + "rate_model", require_string(comp, "rate_model", cp)));
        } else {
          mc.source = load.trace(cp + "trace", require_string(comp, "trace", cp));
        }
        mix.components.push_back(std::move(mc));
      }
      mix.validate();
      nw.source = std::move(mix);
    } else if (w.contains("trace")) {
      ArrivalTrace t = load.trace(path + "trace", require_string(w, "trace", path));
      if (w.contains("workflow_id")) t = relabel(t, require_string(w, "workflow_id", path));
      for (const auto& e : t.events()) {
        if (!cluster.find_workflow(e.workflow_id)) {
          throw ValidationError("trace workflow '" + e.workflow_id + "' is not defined in the cluster",
                                path + "trace");
        }
      }
      if (w.contains("scaling")) {
        const ojson& sc = w.at("scaling");
        const std::string mode = require_string(sc, "mode", path + "scaling.");
        const std::uint64_t sseed = mix_seed(m.seed, 0x5ca1eULL + i);
        if (mode == "correlated") {
          const double f = get_or<double>(sc, "factor", 1.0, path + "scaling.");
          if (!(f >= 1.0)) throw ValidationError("correlated scaling needs factor >= 1", path + "scaling.factor");
          t = scale_correlated(t, f, sseed);
        } else if (mode == "independent") {
          const auto copies = get_or<std::size_t>(sc, "copies", 1, path + "scaling.");
          if (copies < 1) throw ValidationError("copies must be >= 1", path + "scaling.copies");
          t = scale_independent(t, copies, sseed);
        } else {
          throw ValidationError("mode must be correlated or independent", path + "scaling.mode");
        }
      }
      nw.source = std::move(t);
    } else {
      throw ValidationError("workload needs components or a trace", path);
    }
    m.axes.workloads.push_back(std::move(nw));
  }
  m.inputs = std::move(inputs);
  m.inputs.insert(m.inputs.begin(), InputFile{"manifest", "", content_hash(raw)});
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  if (!fs::exists(path)) throw ValidationError("no such manifest: " + path);
  const std::string raw = read_text_file(path);
  ExperimentManifest m = parse_manifest(raw, fs::path(path).parent_path().string());
  m.inputs.front().path = fs::path(path).filename().string();
  return m;
}

std::vector<std::string> provenance_lines(const ExperimentManifest& manifest) {
  std::vector<std::string> out{"tool=" + std::string(kToolName) + " " + std::string(kToolVersion),
                               "experiment=" + manifest.name, "seed=" + std::to_string(manifest.seed),
                               "rng=" + std::string(Rng::kAlgorithm)};
  for (const auto& in : manifest.inputs) out.push_back("input." + in.role + "=" + in.path + "@" + in.hash);
  return out;
}

TrainingSet training_rows(const std::vector<SweepCell>& cells) {
  TrainingSet set;
  for (const auto& c : cells) {
    if (!c.ok || !c.report || !c.plan || !c.cluster) continue;
    const ClusterSpec& cl = *c.cluster;
    const auto util = projected_utilization(cl, *c.plan, c.offered_rates);
    // Segment visits per second at each node.
    std::vector<double> visits(cl.nodes().size(), 0.0);
    for (const auto& w : cl.workflows()) {
      const auto it = c.offered_rates.find(w.id);
      const double rate = it == c.offered_rates.end() ? 0.0 : it->second;
      if (const ModelAssignment* a = c.plan->find(w.model_id)) {
        for (const auto& s : a->segments) visits[*cl.node_index(s.node_id)] += rate;
      }
    }
    const double mean_profile = c.rate_profile ? c.rate_profile->mean_rate() : 0.0;
    const double attempts = 1.0 / (1.0 - cl.link().loss_probability);
    for (const auto& ws : c.report->per_workflow) {
      if (ws.requests == 0) continue;
      const WorkflowSpec* w = cl.find_workflow(ws.workflow_id);
      const ModelAssignment* a = w ? c.plan->find(w->model_id) : nullptr;
      if (!a || a->segments.empty()) continue;
      const ModelProfile* model = cl.find_model(w->model_id);

      double expected = 0.0;
      std::size_t bottleneck = *cl.node_index(a->segments.front().node_id);
      double bottleneck_service = 0.0;
      for (std::size_t k = 0; k < a->segments.size(); ++k) {
        const auto& s = a->segments[k];
        const std::size_t n = *cl.node_index(s.node_id);
        const double service = model->range_cost(s.first, s.last) / cl.nodes()[n].compute_speed;
        expected += service;
        if (k + 1 < a->segments.size() && a->segments[k + 1].node_id != s.node_id) {
          expected += attempts * cl.link().hop_delay(model->layers[s.last].output_payload);
        }
        if (util[n] > util[bottleneck] || k == 0) {
          bottleneck = n;
          bottleneck_service = service;
        }
      }
      TrainingRow r;
      auto& f = r.features;
      f.utilization = util[bottleneck];
      f.lambda = visits[bottleneck];
      f.mu = f.lambda > 0.0 && f.utilization > 0.0 ? f.lambda / f.utilization : 1.0 / bottleneck_service;
      f.expected_output_latency = expected;
      f.cov = c.workload_cov.value_or(0.0);
      f.node_count = static_cast<double>(cl.nodes().size());
      f.link_latency = cl.link().one_way_latency;
      f.strategy_id = c.plan->strategy_name;
      r.slo_latency = ws.slo_latency;
      if (c.rate_profile && c.rate_profile->segment_count() > 1 && mean_profile > 0.0) {
        const auto& p = *c.rate_profile;
        for (std::size_t i = 0; i < p.segment_count(); ++i) {
          r.segments.push_back({p.segment_length(i) / p.duration(), f.lambda * p.rates()[i] / mean_profile});
        }
      }
      r.target = ws.slo_attainment;
      set.rows.push_back(std::move(r));
    }
  }
  return set;
}

namespace {

std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string with_comments(const std::vector<std::string>& lines, const std::string& body) {
  std::string out;
  for (const auto& l : lines) out += "# " + l + "\n";
  return out + body;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::string cell_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell_%04zu", i);
  return buf;
}

ojson plan_json(const PlacementPlan& plan) {
  ojson p;
  p["strategy"] = plan.strategy_name;
  p["assignments"] = ojson::array();
  for (const auto& a : plan.assignments) {
    ojson segs = ojson::array();
    for (const auto& s : a.segments) segs.push_back({{"node", s.node_id}, {"first", s.first}, {"last", s.last}});
    p["assignments"].push_back({{"model", a.model_id}, {"segments", segs}});
  }
  return p;
}

ojson stats_json(const WorkflowStats& w) {
  return ojson{{"workflow", w.workflow_id}, {"requests", w.requests},    {"slo_latency", w.slo_latency},
               {"slo_attainment", w.slo_attainment}, {"p50", w.p50}, {"p95", w.p95},
               {"p99", w.p99},         {"mean_latency", w.mean_latency}, {"throughput", w.throughput}};
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentManifest& manifest, const std::string& out_dir, unsigned threads) {
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "scenarios", ec);
  if (ec) throw EnvironmentError("cannot create output directory " + out_dir + ": " + ec.message());

  SimConfig base{manifest.cluster, PlacementPlan{}, ArrivalTrace({}, manifest.duration), manifest.seed,
                 manifest.warmup, manifest.drain};
  ExperimentOutput out;
  out.cells = sweep(base, manifest.axes, SweepOptions{manifest.duration, threads});
  const auto prov = provenance_lines(manifest);
  const fs::path root(out_dir);
  auto emit = [&](const std::string& rel, const std::string& text) {
    write_text_file((root / rel).string(), text);
    out.files.push_back(rel);
  };

  std::string summary =
      "cell,workload,traffic,link_latency,node_count,strategy,ok,workload_seed,sim_seed,total_rate,workload_cov,"
      "requests,slo_attainment,p50,p95,p99,mean_latency,utilization_variance,error\n";
  std::string per_wf =
      "cell,workload,traffic,link_latency,node_count,strategy,workflow,slo_latency,slo_target,requests,"
      "slo_attainment,p50,p95,p99,mean_latency,throughput\n";
  ojson cells = ojson::array();
  for (const auto& c : out.cells) {
    const auto& s = c.scenario;
    const std::string key = std::to_string(s.index) + "," + csv_field(s.workload) + "," + opt_num(s.traffic) + "," +
                            format_double(s.link_latency) + "," + std::to_string(s.node_count) + "," + s.strategy;
    summary += key + "," + (c.ok ? "1" : "0") + "," + std::to_string(c.workload_seed) + "," +
               std::to_string(c.sim_seed) + "," + format_double(c.total_rate) + "," + opt_num(c.workload_cov) + ",";
    if (c.report) {
      const auto& o = c.report->overall;
      summary += std::to_string(o.requests) + "," + format_double(o.slo_attainment) + "," + format_double(o.p50) +
                 "," + format_double(o.p95) + "," + format_double(o.p99) + "," + format_double(o.mean_latency) +
                 "," + format_double(c.report->utilization_variance) + ",\n";
      for (const auto& w : c.report->per_workflow) {
        const WorkflowSpec* spec = manifest.cluster.find_workflow(w.workflow_id);
        per_wf += key + "," + w.workflow_id + "," + format_double(w.slo_latency) + "," +
                  format_double(spec ? spec->slo_attainment_target : 0.0) + "," + std::to_string(w.requests) + "," +
                  format_double(w.slo_attainment) + "," + format_double(w.p50) + "," + format_double(w.p95) + "," +
                  format_double(w.p99) + "," + format_double(w.mean_latency) + "," + format_double(w.throughput) +
                  "\n";
      }
      std::string nodes = "node,utilization,peak_queue\n";
      for (const auto& n : c.report->per_node) {
        nodes += n.node_id + "," + format_double(n.utilization) + "," + std::to_string(n.peak_queue) + "\n";
      }
      auto lines = prov;
      lines.push_back("cell=" + std::to_string(s.index));
      lines.push_back("sim_seed=" + std::to_string(c.sim_seed));
      emit("scenarios/" + cell_name(s.index) + ".csv", with_comments(lines, nodes));
      if (manifest.write_requests) {
        emit("scenarios/" + cell_name(s.index) + "_requests.csv", per_request_csv(*c.report, lines));
      }
    } else {
      summary += ",,,,,,," + csv_field(c.error) + "\n";
    }

    ojson cj;
    cj["cell"] = s.index;
    cj["workload"] = s.workload;
    cj["traffic"] = s.traffic ? ojson(*s.traffic) : ojson(nullptr);
    cj["link_latency"] = s.link_latency;
    cj["node_count"] = s.node_count;
    cj["strategy"] = s.strategy;
    cj["workload_seed"] = c.workload_seed;
    cj["sim_seed"] = c.sim_seed;
    cj["ok"] = c.ok;
    if (!c.ok) cj["error"] = c.error;
    cj["total_rate"] = c.total_rate;
    if (c.plan) cj["plan"] = plan_json(*c.plan);
    if (c.report) {
      const auto& r = *c.report;
      cj["overall"] = stats_json(r.overall);
      cj["workflows"] = ojson::array();
      for (const auto& w : r.per_workflow) cj["workflows"].push_back(stats_json(w));
      cj["nodes"] = ojson::array();
      for (const auto& n : r.per_node) {
        cj["nodes"].push_back({{"node", n.node_id}, {"utilization", n.utilization}, {"peak_queue", n.peak_queue}});
      }
      cj["utilization_variance"] = r.utilization_variance;
      cj["conservation"] = {{"injected", r.conservation.injected},
                            {"completed", r.conservation.completed},
                            {"residual", r.conservation.residual}};
    }
    cells.push_back(std::move(cj));
  }
  emit("summary.csv", with_comments(prov, summary));
  emit("summary_workflows.csv", with_comments(prov, per_wf));
  emit("training.csv", training_set_to_csv(training_rows(out.cells), prov));

  ojson doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["experiment"] = manifest.name;
  doc["seed"] = manifest.seed;
  doc["rng"] = Rng::kAlgorithm;
  doc["inputs"] = ojson::array();
  for (const auto& in : manifest.inputs) doc["inputs"].push_back({{"role", in.role}, {"path", in.path}, {"hash", in.hash}});
  doc["duration"] = manifest.duration;
  doc["warmup"] = manifest.warmup;
  doc["drain"] = manifest.drain;
  doc["cells"] = std::move(cells);
  emit("results.json", doc.dump(1) + "\n");
  std::sort(out.files.begin(), out.files.end());
  return out;
}

}  // namespace adae
