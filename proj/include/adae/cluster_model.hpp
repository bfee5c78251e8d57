#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adae {

inline constexpr int kClusterSchemaVersion = 1;

struct NodeSpec {
  std::string id;
  double compute_speed = 1.0;    // cost units / second
  double memory_capacity = 0.0;  // bytes

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct LinkSpec {
  double one_way_latency = 0.0;                                     // seconds
  double bandwidth = std::numeric_limits<double>::infinity();       // bytes / second
  double loss_probability = 0.0;

  // Delay of one transfer attempt carrying `payload` bytes.
  double hop_delay(double payload) const {
    return one_way_latency + (std::isinf(bandwidth) ? 0.0 : payload / bandwidth);
  }

  friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
};

struct LayerProfile {
  double compute_cost = 0.0;      // cost units
  double memory_footprint = 0.0;  // bytes
  double output_payload = 0.0;    // bytes

  friend bool operator==(const LayerProfile&, const LayerProfile&) = default;
};

struct ModelProfile {
  std::string id;
  std::vector<LayerProfile> layers;

  double total_cost() const;
  double total_memory() const;
  // Σ compute_cost over layers [first, last].
  double range_cost(std::size_t first, std::size_t last) const;
  double range_memory(std::size_t first, std::size_t last) const;

  friend bool operator==(const ModelProfile&, const ModelProfile&) = default;
};

struct WorkflowSpec {
  std::string id;
  std::string model_id;
  double slo_latency = 1.0;            // seconds per frame
  double slo_attainment_target = 1.0;  // fraction in (0, 1]

  friend bool operator==(const WorkflowSpec&, const WorkflowSpec&) = default;
};

// Validated cluster description; ids are unique and workflow model ids
// resolve. Mutate only through the factory functions, which re-validate.
class ClusterSpec {
 public:
  ClusterSpec(std::vector<NodeSpec> nodes, LinkSpec link, std::vector<ModelProfile> models,
              std::vector<WorkflowSpec> workflows);

  const std::vector<NodeSpec>& nodes() const noexcept { return nodes_; }
  const LinkSpec& link() const noexcept { return link_; }
  const std::vector<ModelProfile>& models() const noexcept { return models_; }
  const std::vector<WorkflowSpec>& workflows() const noexcept { return workflows_; }

  const NodeSpec* find_node(std::string_view id) const;
  const ModelProfile* find_model(std::string_view id) const;
  const WorkflowSpec* find_workflow(std::string_view id) const;
  std::optional<std::size_t> node_index(std::string_view id) const;

  // First `count` nodes, same link/models/workflows.
  ClusterSpec with_node_count(std::size_t count) const;
  ClusterSpec with_link_latency(double one_way_latency) const;

  friend bool operator==(const ClusterSpec&, const ClusterSpec&) = default;

 private:
  std::vector<NodeSpec> nodes_;
  LinkSpec link_;
  std::vector<ModelProfile> models_;
  std::vector<WorkflowSpec> workflows_;
};

// Config document (JSON):
//   {"schema_version": 1,
//    "nodes": [{"id", "compute_speed", "memory_capacity"}],
//    "link": {"one_way_latency", "bandwidth" (number | "infinite"), "loss_probability"},
//    "models": [{"id", "layers": [{"compute_cost", "memory_footprint", "output_payload"}]}
//               | {"builtin": "yolov5n"}],
//    "workflows": [{"id", "model_id", "slo_latency", "slo_attainment_target"}
//                  | {"id", "model_id", "template": "ADAE1"}]}
// Errors carry the path of the offending field.
ClusterSpec load_cluster_config(std::string_view raw);
std::string serialize_cluster_config(const ClusterSpec& cluster);

struct SloTemplate {
  std::string_view id;
  double slo_latency;
  double slo_attainment_target;
  std::string_view data;  // "photo" | "video", metadata only
};

// The seven field-study SLO rows, in study order.
const std::vector<SloTemplate>& builtin_slo_registry();
const SloTemplate* find_slo_template(std::string_view id);

// Synthetic YOLOv5-ladder profiles (n, s, m, l, x). Layer costs, footprints
// and payloads are invented stand-ins scaled by parameter-count ratios,
// not measurements.
const std::vector<ModelProfile>& builtin_model_profiles();
const ModelProfile* find_builtin_model(std::string_view id);

// Σ node compute speeds.
double aggregate_capacity(const ClusterSpec& cluster);

}  // namespace adae
