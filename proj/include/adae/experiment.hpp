#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adae/predictor.hpp"
#include "adae/sim_engine.hpp"

namespace adae {

inline constexpr int kManifestSchemaVersion = 1;

// One input file referenced by a manifest, with its content hash.
struct InputFile {
  std::string role;  // "manifest", "cluster", "workloads[0].components[1]", ...
  std::string path;
  std::string hash;
};

// A reproducible study.
//
// Manifest document (JSON, paths relative to the manifest file):
//   {"schema_version": 1, "name", "cluster": path, "seed", "duration",
//    "warmup", "drain", "write_requests", "output_dir",
//    "strategies": [...],
//    "axes": {"traffic": [...], "link_latency": [...], "node_count": [...]},
//    "workloads": [
//      {"name", "components": [{"rate_model" | "trace": path, "share",
//                               "workflow_id"}]}
//    | {"name", "trace": path, "workflow_id"?,
//       "scaling": {"mode": "correlated", "factor"}
//                | {"mode": "independent", "copies"}}]}
struct ExperimentManifest {
  std::string name;
  ClusterSpec cluster;
  std::uint64_t seed = 0;
  double duration = 600.0;
  double warmup = 0.0;
  bool drain = true;
  bool write_requests = false;
  std::string output_dir;  // resolved; empty when the manifest names none
  SweepAxes axes;
  std::vector<InputFile> inputs;
};

ExperimentManifest parse_manifest(std::string_view raw, const std::string& base_dir);
ExperimentManifest load_manifest(const std::string& path);

// Converts sweep cells to predictor rows, one per (cell, workflow with
// requests). Features describe the workflow's bottleneck node.
TrainingSet training_rows(const std::vector<SweepCell>& cells);

struct ExperimentOutput {
  std::vector<SweepCell> cells;
  std::vector<std::string> files;  // relative to the output directory, sorted
};

// Runs the sweep and writes summary.csv, summary_workflows.csv,
// scenarios/cell_NNNN.csv, results.json and training.csv under out_dir.
ExperimentOutput run_experiment(const ExperimentManifest& manifest, const std::string& out_dir,
                                unsigned threads = 0);

// "# key=value" lines shared by every output file.
std::vector<std::string> provenance_lines(const ExperimentManifest& manifest);

}  // namespace adae
