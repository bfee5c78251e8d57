#include "adae/cluster_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>
#include <set>

#include "adae/error.hpp"

namespace adae {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

double ModelProfile::total_cost() const { return layers.empty() ? 0.0 : range_cost(0, layers.size() - 1); }

double ModelProfile::total_memory() const {
  return layers.empty() ? 0.0 : range_memory(0, layers.size() - 1);
}

double ModelProfile::range_cost(std::size_t first, std::size_t last) const {
  double c = 0.0;
  for (std::size_t i = first; i <= last; ++i) c += layers[i].compute_cost;
  return c;
}

double ModelProfile::range_memory(std::size_t first, std::size_t last) const {
  double m = 0.0;
  for (std::size_t i = first; i <= last; ++i) m += layers[i].memory_footprint;
  return m;
}

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void require_positive(double v, const std::string& path) {
  if (!positive(v)) throw ValidationError("must be positive and finite", path);
}

}  // namespace

ClusterSpec::ClusterSpec(std::vector<NodeSpec> nodes, LinkSpec link, std::vector<ModelProfile> models,
                         std::vector<WorkflowSpec> workflows)
    : nodes_(std::move(nodes)), link_(link), models_(std::move(models)), workflows_(std::move(workflows)) {
  if (nodes_.empty()) throw ValidationError("cluster needs at least one node", "nodes");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const std::string p = "nodes[" + std::to_string(i) + "]";
    if (nodes_[i].id.empty()) throw ValidationError("empty id", p + ".id");
    if (!seen.insert(nodes_[i].id).second) {
      throw ValidationError("duplicate node id '" + nodes_[i].id + "'", p + ".id");
    }
    require_positive(nodes_[i].compute_speed, p + ".compute_speed");
    require_positive(nodes_[i].memory_capacity, p + ".memory_capacity");
  }
  if (!std::isfinite(link_.one_way_latency) || link_.one_way_latency < 0.0) {
    throw ValidationError("must be finite and non-negative", "link.one_way_latency");
  }
  if (!(link_.bandwidth > 0.0)) throw ValidationError("must be positive", "link.bandwidth");
  if (!(link_.loss_probability >= 0.0 && link_.loss_probability < 1.0)) {
    throw ValidationError("must lie in [0, 1)", "link.loss_probability");
  }
  seen.clear();
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const std::string p = "models[" + std::to_string(i) + "]";
    if (models_[i].id.empty()) throw ValidationError("empty id", p + ".id");
    if (!seen.insert(models_[i].id).second) {
      throw ValidationError("duplicate model id '" + models_[i].id + "'", p + ".id");
    }
    if (models_[i].layers.empty()) throw ValidationError("model needs at least one layer", p + ".layers");
    for (std::size_t k = 0; k < models_[i].layers.size(); ++k) {
      const std::string lp = p + ".layers[" + std::to_string(k) + "]";
      require_positive(models_[i].layers[k].compute_cost, lp + ".compute_cost");
      require_positive(models_[i].layers[k].memory_footprint, lp + ".memory_footprint");
      require_positive(models_[i].layers[k].output_payload, lp + ".output_payload");
    }
  }
  seen.clear();
  for (std::size_t i = 0; i < workflows_.size(); ++i) {
    const std::string p = "workflows[" + std::to_string(i) + "]";
    const auto& w = workflows_[i];
    if (w.id.empty()) throw ValidationError("empty id", p + ".id");
    if (!seen.insert(w.id).second) throw ValidationError("duplicate workflow id '" + w.id + "'", p + ".id");
    if (!find_model(w.model_id)) {
      throw ValidationError("unknown model '" + w.model_id + "'", p + ".model_id");
    }
    require_positive(w.slo_latency, p + ".slo_latency");
    if (!(w.slo_attainment_target > 0.0 && w.slo_attainment_target <= 1.0)) {
      throw ValidationError("must lie in (0, 1]", p + ".slo_attainment_target");
    }
  }
}

const NodeSpec* ClusterSpec::find_node(std::string_view id) const {
  for (const auto& n : nodes_) if (n.id == id) return &n;
  return nullptr;
}

const ModelProfile* ClusterSpec::find_model(std::string_view id) const {
  for (const auto& m : models_) if (m.id == id) return &m;
  return nullptr;
}

const WorkflowSpec* ClusterSpec::find_workflow(std::string_view id) const {
  for (const auto& w : workflows_) if (w.id == id) return &w;
  return nullptr;
}

std::optional<std::size_t> ClusterSpec::node_index(std::string_view id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) if (nodes_[i].id == id) return i;
  return std::nullopt;
}

ClusterSpec ClusterSpec::with_node_count(std::size_t count) const {
  if (count < 1 || count > nodes_.size()) {
    throw InfeasibleError("node count " + std::to_string(count) + " outside 1.." +
                          std::to_string(nodes_.size()));
  }
  return ClusterSpec({nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(count)}, link_,
                     models_, workflows_);
}

ClusterSpec ClusterSpec::with_link_latency(double one_way_latency) const {
  LinkSpec l = link_;
  l.one_way_latency = one_way_latency;
  return ClusterSpec(nodes_, l, models_, workflows_);
}

double aggregate_capacity(const ClusterSpec& cluster) {
  double total = 0.0;
  for (const auto& n : cluster.nodes()) total += n.compute_speed;
  return total;
}

const std::vector<SloTemplate>& builtin_slo_registry() {
  static const std::vector<SloTemplate> registry = {
      {"ADAE1", 0.4, 0.50, "photo"},  {"ADAE2", 1.0, 0.99, "photo"},
      {"ADAE3", 1.0, 0.80, "photo"},  {"ADAE4", 1.0, 0.80, "video"},
      {"ADAE5", 0.03, 0.95, "video"}, {"ADAE6", 180.0, 0.99, "photo"},
      {"ADAE7", 0.03, 0.95, "video"},
  };
  return registry;
}

const SloTemplate* find_slo_template(std::string_view id) {
  for (const auto& t : builtin_slo_registry()) if (t.id == id) return &t;
  return nullptr;
}

const std::vector<ModelProfile>& builtin_model_profiles() {
  // Synthetic 25-stage layout (backbone, neck, head). Relative weights are
  // invented; totals follow published parameter counts (millions).
  static const std::vector<ModelProfile> profiles = [] {
    constexpr std::array<double, 25> weight = {1, 2, 2, 4, 4, 6, 6, 8, 8, 6, 4, 2, 4,
                                               3, 2, 1, 2, 3, 2, 3, 4, 6, 4, 8, 2};
    constexpr std::array<double, 25> payload_mb = {1.6, 1.6, 0.8, 0.8, 0.4, 0.4, 0.2, 0.2, 0.1,
                                                   0.1, 0.1, 0.2, 0.2, 0.2, 0.4, 0.4, 0.4, 0.2,
                                                   0.2, 0.1, 0.1, 0.1, 0.1, 0.05, 0.05};
    struct Size {
      const char* id;
      double params_m;
      double width;
    };
    constexpr std::array<Size, 5> ladder = {
        Size{"yolov5n", 1.9, 0.25}, Size{"yolov5s", 7.2, 0.5}, Size{"yolov5m", 21.2, 0.75},
        Size{"yolov5l", 46.5, 1.0}, Size{"yolov5x", 86.7, 1.25}};
    double wsum = 0.0;
    for (double w : weight) wsum += w;
    std::vector<ModelProfile> out;
    for (const auto& s : ladder) {
      ModelProfile m{s.id, {}};
      const double cost = 0.1 * s.params_m;           // cost units
      const double bytes = 4.0 * s.params_m * 1e6;    // fp32 weights
      for (std::size_t i = 0; i < weight.size(); ++i) {
        m.layers.push_back({cost * weight[i] / wsum, bytes * weight[i] / wsum,
                            s.width * payload_mb[i] * 1e6});
      }
      out.push_back(std::move(m));
    }
    return out;
  }();
  return profiles;
}

const ModelProfile* find_builtin_model(std::string_view id) {
  for (const auto& m : builtin_model_profiles()) if (m.id == id) return &m;
  return nullptr;
}

namespace {

double number_at(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("missing field", path + "." + key);
  if (!it->is_number()) throw ValidationError("expected a number", path + "." + key);
  return it->get<double>();
}

std::string string_at(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("missing field", path + "." + key);
  if (!it->is_string()) throw ValidationError("expected a string", path + "." + key);
  return it->get<std::string>();
}

const json& array_at(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("missing field", path + key);
  if (!it->is_array()) throw ValidationError("expected an array", path + key);
  return *it;
}

}  // namespace

ClusterSpec load_cluster_config(std::string_view raw) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end(), nullptr, true, true);
  } catch (const json::exception& e) {
    throw ParseError(std::string("cluster config: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("cluster config must be an object");
  if (doc.contains("schema_version")) {
    if (!doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != kClusterSchemaVersion) {
      throw ValidationError("unsupported schema version", "schema_version");
    }
  }

  std::vector<NodeSpec> nodes;
  const auto& jn = array_at(doc, "nodes", "");
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string p = "nodes[" + std::to_string(i) + "]";
    nodes.push_back({string_at(jn[i], "id", p), number_at(jn[i], "compute_speed", p),
                     number_at(jn[i], "memory_capacity", p)});
  }

  LinkSpec link;
  if (doc.contains("link")) {
    const auto& jl = doc["link"];
    if (!jl.is_object()) throw ValidationError("expected an object", "link");
    link.one_way_latency = jl.contains("one_way_latency") ? number_at(jl, "one_way_latency", "link") : 0.0;
    if (jl.contains("bandwidth")) {
      const auto& b = jl["bandwidth"];
      if (b.is_string() && b.get<std::string>() == "infinite") {
        link.bandwidth = std::numeric_limits<double>::infinity();
      } else if (b.is_number()) {
        link.bandwidth = b.get<double>();
      } else {
        throw ValidationError("expected a number or \"infinite\"", "link.bandwidth");
      }
    }
    link.loss_probability = jl.contains("loss_probability") ? number_at(jl, "loss_probability", "link") : 0.0;
  }

  std::vector<ModelProfile> models;
  if (doc.contains("models")) {
    const auto& jm = array_at(doc, "models", "");
    for (std::size_t i = 0; i < jm.size(); ++i) {
      const std::string p = "models[" + std::to_string(i) + "]";
      if (jm[i].contains("builtin")) {
        const std::string name = string_at(jm[i], "builtin", p);
        const ModelProfile* b = find_builtin_model(name);
        if (!b) throw ValidationError("unknown builtin model '" + name + "'", p + ".builtin");
        ModelProfile m = *b;
        if (jm[i].contains("id")) m.id = string_at(jm[i], "id", p);
        models.push_back(std::move(m));
        continue;
      }
      ModelProfile m{string_at(jm[i], "id", p), {}};
      const auto& jlayers = array_at(jm[i], "layers", p + ".");
      for (std::size_t k = 0; k < jlayers.size(); ++k) {
        const std::string lp = p + ".layers[" + std::to_string(k) + "]";
        m.layers.push_back({number_at(jlayers[k], "compute_cost", lp),
                            number_at(jlayers[k], "memory_footprint", lp),
                            number_at(jlayers[k], "output_payload", lp)});
      }
      models.push_back(std::move(m));
    }
  }

  std::vector<WorkflowSpec> workflows;
  if (doc.contains("workflows")) {
    const auto& jw = array_at(doc, "workflows", "");
    for (std::size_t i = 0; i < jw.size(); ++i) {
      const std::string p = "workflows[" + std::to_string(i) + "]";
      WorkflowSpec w{string_at(jw[i], "id", p), string_at(jw[i], "model_id", p), 0.0, 0.0};
      if (jw[i].contains("template")) {
        const std::string t = string_at(jw[i], "template", p);
        const SloTemplate* tpl = find_slo_template(t);
        if (!tpl) throw ValidationError("unknown SLO template '" + t + "'", p + ".template");
        w.slo_latency = tpl->slo_latency;
        w.slo_attainment_target = tpl->slo_attainment_target;
      }
      if (jw[i].contains("slo_latency")) w.slo_latency = number_at(jw[i], "slo_latency", p);
      if (jw[i].contains("slo_attainment_target")) {
        w.slo_attainment_target = number_at(jw[i], "slo_attainment_target", p);
      }
      workflows.push_back(std::move(w));
    }
  }
  return ClusterSpec(std::move(nodes), link, std::move(models), std::move(workflows));
}

std::string serialize_cluster_config(const ClusterSpec& cluster) {
  ojson doc;
  doc["schema_version"] = kClusterSchemaVersion;
  doc["nodes"] = ojson::array();
  for (const auto& n : cluster.nodes()) {
    doc["nodes"].push_back({{"id", n.id}, {"compute_speed", n.compute_speed},
                            {"memory_capacity", n.memory_capacity}});
  }
  ojson link;
  link["one_way_latency"] = cluster.link().one_way_latency;
  if (std::isinf(cluster.link().bandwidth)) link["bandwidth"] = "infinite";
  else link["bandwidth"] = cluster.link().bandwidth;
  link["loss_probability"] = cluster.link().loss_probability;
  doc["link"] = link;
  doc["models"] = ojson::array();
  for (const auto& m : cluster.models()) {
    ojson jm;
    jm["id"] = m.id;
    jm["layers"] = ojson::array();
    for (const auto& l : m.layers) {
      jm["layers"].push_back({{"compute_cost", l.compute_cost},
                              {"memory_footprint", l.memory_footprint},
                              {"output_payload", l.output_payload}});
    }
    doc["models"].push_back(jm);
  }
  doc["workflows"] = ojson::array();
  for (const auto& w : cluster.workflows()) {
    doc["workflows"].push_back({{"id", w.id}, {"model_id", w.model_id}, {"slo_latency", w.slo_latency},
                                {"slo_attainment_target", w.slo_attainment_target}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace adae
