// adae: trace analysis, workload generation, placement sweeps and SLO
// attainment prediction for edge inference clusters.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "adae/burst_model.hpp"
#include "adae/error.hpp"
#include "adae/experiment.hpp"
#include "adae/hash.hpp"
#include "adae/kernels.hpp"
#include "adae/predictor.hpp"
#include "adae/rng.hpp"
#include "adae/trace_io.hpp"
#include "adae/version.hpp"
#include "adae/workload_gen.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string out_path(const Globals& g, const std::string& name) {
  return g.out.empty() ? name : (fs::path(g.out) / name).string();
}

void ensure_parent(const std::string& file) {
  const fs::path parent = fs::path(file).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw adae::EnvironmentError("cannot create directory " + parent.string() + ": " + ec.message());
}

std::string tool_line() { return "tool=" + std::string(adae::kToolName) + " " + std::string(adae::kToolVersion); }

// --- trace analyze ----------------------------------------------------------

struct AnalyzeArgs {
  std::string trace;
  std::optional<double> bin_width, penalty;
  std::string output;
};

int cmd_trace_analyze(const Globals& g, const AnalyzeArgs& a) {
  const std::string raw = [&] {
    if (!fs::exists(a.trace)) throw adae::Error("no such trace: " + a.trace);
    return adae::read_text_file(a.trace);
  }();
  const adae::ArrivalTrace trace = adae::parse_trace(raw);
  adae::SegmentationOptions opt{a.bin_width, a.penalty};
  const adae::SegmentedRateModel model = adae::detect_change_points(trace, opt);

  std::optional<double> cov;
  try {
    cov = adae::coefficient_of_variation(trace).cov;
  } catch (const adae::Error&) {
  }
  const std::string file = !a.output.empty() ? a.output
                                             : out_path(g, fs::path(a.trace).stem().string() + ".model.json");
  ensure_parent(file);
  adae::write_text_file(file, adae::rate_model_to_json(model));

  if (!g.quiet) {
    std::cout << "events     " << trace.size() << "\n"
              << "duration   " << fixed(trace.duration(), 3) << " s\n"
              << "mean rate  " << fixed(static_cast<double>(trace.size()) / trace.duration(), 4) << " req/s\n"
              << "CoV        " << (cov ? fixed(*cov, 3) : std::string("n/a (fewer than 3 events)")) << "\n"
              << "segments   " << model.segment_count() << "\n\n"
              << pad("#", 5) << pad("start", 14) << pad("end", 14) << "rate\n";
    for (std::size_t i = 0; i < model.segment_count(); ++i) {
      std::cout << pad(std::to_string(i), 5) << pad(fixed(model.segment_start(i), 3), 14)
                << pad(fixed(model.segment_end(i), 3), 14) << fixed(model.rates()[i], 4) << "\n";
    }
  }
  return 0;
}

// --- workload gen -----------------------------------------------------------

struct GenArgs {
  std::string model, trace, mode, output, workflow_id;
  std::optional<double> scale_factor, target_utilization, service_rate, duration;
};

int cmd_workload_gen(const Globals& g, const GenArgs& a) {
  using adae::ValidationError;
  if (a.model.empty() == a.trace.empty()) throw ValidationError("give exactly one of --model or --trace");
  if (a.scale_factor && (a.target_utilization || a.service_rate)) {
    throw ValidationError("--scale-factor conflicts with --target-utilization/--service-rate");
  }
  if (a.target_utilization.has_value() != a.service_rate.has_value()) {
    throw ValidationError("--target-utilization and --service-rate go together");
  }
  if (!a.mode.empty() && a.mode != "model" && a.mode != "correlated" && a.mode != "independent") {
    throw ValidationError("--mode must be correlated or independent");
  }
  if (!a.mode.empty() && a.mode != "model" && !a.model.empty()) {
    throw ValidationError("--mode " + a.mode + " scales a trace; use --trace");
  }
  if (a.scale_factor && !(*a.scale_factor > 0.0 && std::isfinite(*a.scale_factor))) {
    throw ValidationError("scale factor must be positive", "scale-factor");
  }
  const std::uint64_t seed = g.seed.value_or(0);

  std::string input_raw;
  std::optional<adae::ArrivalTrace> source;
  std::optional<adae::SegmentedRateModel> model;
  if (!a.model.empty()) {
    if (!fs::exists(a.model)) throw adae::Error("no such rate model: " + a.model);
    input_raw = adae::read_text_file(a.model);
    model = adae::rate_model_from_json(input_raw);
  } else {
    if (!fs::exists(a.trace)) throw adae::Error("no such trace: " + a.trace);
    input_raw = adae::read_text_file(a.trace);
    source = adae::parse_trace(input_raw);
    model = adae::detect_change_points(*source);
  }
  double factor = a.scale_factor.value_or(1.0);
  if (a.target_utilization) factor = adae::factor_for_utilization(*model, *a.service_rate, *a.target_utilization);

  std::vector<std::string> comments{tool_line(), "input=" + fs::path(a.model.empty() ? a.trace : a.model).filename().string() +
                                                     "@" + adae::content_hash(input_raw),
                                    "scale_factor=" + adae::format_double(factor)};
  std::optional<adae::ArrivalTrace> result;
  if (a.mode == "correlated") {
    if (!(factor >= 1.0)) throw ValidationError("correlated scaling needs factor >= 1", "scale-factor");
    comments.push_back("mode=correlated");
    comments.push_back("seed=" + std::to_string(seed));
    comments.push_back("rng=" + std::string(adae::Rng::kAlgorithm));
    result = adae::scale_correlated(*source, factor, seed);
  } else if (a.mode == "independent") {
    const double copies = std::round(factor);
    if (std::fabs(copies - factor) > 1e-9 || copies < 1.0) {
      throw ValidationError("independent scaling needs an integer factor >= 1", "scale-factor");
    }
    comments.push_back("mode=independent");
    comments.push_back("seed=" + std::to_string(seed));
    comments.push_back("rng=" + std::string(adae::Rng::kAlgorithm));
    result = adae::scale_independent(*source, static_cast<std::size_t>(copies), seed);
  } else {
    adae::SegmentedRateModel m = adae::scale_rates(*model, factor);
    if (a.duration) m = adae::tile_to_duration(m, *a.duration);
    adae::GeneratorSpec spec{m, seed, a.workflow_id.empty() ? std::string(adae::kDefaultWorkflow) : a.workflow_id};
    for (auto& c : adae::provenance_comments(spec)) comments.push_back(std::move(c));
    result = adae::generate(spec);
  }
  const std::string file = !a.output.empty() ? a.output : out_path(g, "workload.csv");
  ensure_parent(file);
  adae::write_text_file(file, adae::serialize_trace(*result, comments));
  if (!g.quiet) {
    std::cout << "events     " << result->size() << "\n"
              << "duration   " << fixed(result->duration(), 3) << " s\n"
              << "mean rate  " << fixed(static_cast<double>(result->size()) / result->duration(), 4) << " req/s\n"
              << "factor     " << adae::format_double(factor) << "\n";
  }
  return 0;
}

// --- sim run ---------------------------------------------------------------

int cmd_sim_run(const Globals& g, const std::string& manifest_path, unsigned threads) {
  adae::ExperimentManifest m = adae::load_manifest(manifest_path);
  if (g.seed) m.seed = *g.seed;
  std::string out = g.out;
  if (out.empty()) out = m.output_dir.empty() ? (fs::path("results") / m.name).string() : m.output_dir;
  const adae::ExperimentOutput res = adae::run_experiment(m, out, threads);
  if (!g.quiet) {
    std::size_t ok = 0;
    for (const auto& c : res.cells) ok += c.ok;
    std::cout << pad("cell", 6) << pad("workload", 22) << pad("traffic", 9) << pad("latency", 9) << pad("nodes", 7)
              << pad("strategy", 19) << "attainment\n";
    for (const auto& c : res.cells) {
      const auto& s = c.scenario;
      std::cout << pad(std::to_string(s.index), 6) << pad(s.workload, 22)
                << pad(s.traffic ? fixed(*s.traffic, 2) : "-", 9) << pad(adae::format_double(s.link_latency), 9)
                << pad(std::to_string(s.node_count), 7) << pad(s.strategy, 19)
                << (c.ok ? fixed(c.report->overall.slo_attainment, 4) : "infeasible: " + c.error) << "\n";
    }
    std::cout << "\n" << ok << "/" << res.cells.size() << " cells simulated; " << res.files.size()
              << " files written to " << out << "\n";
  }
  return 0;
}

// --- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string train, test, model = "all", feature_mode = "paper-faithful", model_out;
  std::size_t trees = 100;
  int max_depth = -1;
  std::size_t min_leaf = 2;
  double feature_subset = 1.0;
  std::size_t rounds = 200;
  double learning_rate = 0.1;
  int gb_max_depth = 3;
  double subsample = 1.0;
  double hybrid_weight = 0.5;
};

adae::TrainingSet read_set(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw adae::Error(std::string("no such ") + what + " set: " + path);
  adae::TrainingSet s = adae::training_set_from_csv(adae::read_text_file(path));
  if (s.rows.empty()) throw adae::ValidationError(std::string(what) + " set is empty", path);
  return s;
}

int cmd_predict(const Globals& g, const PredictArgs& a) {
  const adae::TrainingSet train = read_set(a.train, "training");
  const adae::TrainingSet test = read_set(a.test, "test");
  const adae::FeatureMode mode = adae::parse_feature_mode(a.feature_mode);
  const std::uint64_t seed = g.seed.value_or(0);

  std::vector<adae::PredictorKind> kinds;
  if (a.model == "all") {
    kinds = {adae::PredictorKind::gradient_boost, adae::PredictorKind::md1, adae::PredictorKind::random_forest,
             adae::PredictorKind::hybrid};
  } else {
    kinds.push_back(adae::parse_predictor_kind(a.model));
  }
  if (kinds.size() > 1 && !a.model_out.empty()) throw adae::ValidationError("--model-out needs a single --model");
  if (train.rows.size() < 2 && (kinds.size() > 1 || kinds.front() != adae::PredictorKind::md1)) {
    throw adae::ValidationError("training needs at least 2 rows", a.train);
  }

  adae::ForestParams fp;
  fp.trees = a.trees;
  fp.tree = {a.max_depth, a.min_leaf, a.feature_subset};
  adae::BoostParams bp;
  bp.rounds = a.rounds;
  bp.learning_rate = a.learning_rate;
  bp.max_depth = a.gb_max_depth;
  bp.subsample = a.subsample;

  struct Row {
    adae::PredictorKind kind;
    adae::EvaluationResult eval;
  };
  std::vector<Row> rows;
  std::optional<adae::PredictorModel> forest;
  for (auto kind : kinds) {
    adae::PredictorModel m = adae::PredictorModel::md1();
    switch (kind) {
      case adae::PredictorKind::md1: break;
      case adae::PredictorKind::random_forest:
      case adae::PredictorKind::hybrid:
        if (!forest) forest = adae::PredictorModel::train_random_forest(train, fp, seed, mode);
        m = kind == adae::PredictorKind::hybrid ? adae::PredictorModel::make_hybrid(*forest, a.hybrid_weight)
                                                : *forest;
        break;
      case adae::PredictorKind::gradient_boost: m = adae::PredictorModel::train_gradient_boost(train, bp, seed, mode); break;
    }
    rows.push_back({kind, adae::evaluate(m, test)});
    const std::string file =
        !a.model_out.empty() ? a.model_out : out_path(g, "model_" + std::string(adae::predictor_kind_name(kind)) + ".json");
    ensure_parent(file);
    adae::write_text_file(file, m.to_json());
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& x, const Row& y) { return x.eval.relative_error_pct < y.eval.relative_error_pct; });
  if (!g.quiet) {
    std::cout << pad("model", 17) << pad("error %", 10) << pad("MAE", 9) << "test rows\n";
    for (const auto& r : rows) {
      std::cout << pad(std::string(adae::predictor_kind_name(r.kind)), 17) << pad(fixed(r.eval.relative_error_pct, 2), 10)
                << pad(fixed(r.eval.mean_absolute_error, 4), 9) << r.eval.rows;
      if (r.eval.absolute_fallback_rows) std::cout << " (" << r.eval.absolute_fallback_rows << " with absolute error)";
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_version(const Globals& g) {
  if (!g.quiet) {
    std::cout << adae::kToolName << " " << adae::kToolVersion << "\n"
              << "rng       " << adae::Rng::kAlgorithm << "\n"
              << "generator " << adae::kGeneratorVersion << "\n"
              << "kernels   " << adae::kernels::isa_name(adae::kernels::active_isa()) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge inference placement, simulation and SLO prediction toolkit", "adae"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Random seed (u64)");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--quiet", g.quiet, "Suppress tables on standard output");

  auto* trace = app.add_subcommand("trace", "Arrival trace tools");
  trace->require_subcommand(1);
  AnalyzeArgs aa;
  auto* analyze = trace->add_subcommand("analyze", "Burstiness report and fitted rate model");
  analyze->add_option("trace", aa.trace, "Trace CSV")->required();
  analyze->add_option("--bin-width", aa.bin_width, "Segmentation bin width, seconds");
  analyze->add_option("--penalty", aa.penalty, "Segmentation penalty");
  analyze->add_option("--output", aa.output, "Rate model file (default <out>/<trace>.model.json)");

  auto* workload = app.add_subcommand("workload", "Workload generation");
  workload->require_subcommand(1);
  GenArgs ga;
  auto* gen = workload->add_subcommand("gen", "Generate or scale an arrival trace");
  gen->add_option("--model", ga.model, "Rate model document");
  gen->add_option("--trace", ga.trace, "Trace to fit or scale");
  gen->add_option("--scale-factor", ga.scale_factor, "Rate multiplier");
  gen->add_option("--target-utilization", ga.target_utilization, "Target utilization of one server");
  gen->add_option("--service-rate", ga.service_rate, "Service rate for --target-utilization, req/s");
  gen->add_option("--mode", ga.mode, "correlated | independent (scales --trace in place)");
  gen->add_option("--duration", ga.duration, "Tile the model to this duration, seconds");
  gen->add_option("--workflow-id", ga.workflow_id, "Workflow tag of generated events");
  gen->add_option("--output", ga.output, "Output trace (default <out>/workload.csv)");

  auto* sim = app.add_subcommand("sim", "Simulation");
  sim->require_subcommand(1);
  std::string manifest;
  unsigned threads = 0;
  auto* run = sim->add_subcommand("run", "Run an experiment manifest");
  run->add_option("manifest", manifest, "Manifest JSON")->required();
  run->add_option("--threads", threads, "Worker threads (default ADAE_THREADS or all cores)");

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Train and evaluate SLO attainment predictors");
  predict->add_option("--train", pa.train, "Training CSV")->required();
  predict->add_option("--test", pa.test, "Test CSV")->required();
  predict->add_option("--model", pa.model, "md1 | rf | gb | hybrid | all");
  predict->add_option("--feature-mode", pa.feature_mode, "paper-faithful | extended");
  predict->add_option("--model-out", pa.model_out, "Model file (single --model only)");
  predict->add_option("--trees", pa.trees, "Forest size");
  predict->add_option("--max-depth", pa.max_depth, "Forest tree depth (-1 unlimited)");
  predict->add_option("--min-leaf", pa.min_leaf, "Minimum rows per leaf");
  predict->add_option("--feature-subset", pa.feature_subset, "Share of features tried per split");
  predict->add_option("--rounds", pa.rounds, "Boosting rounds");
  predict->add_option("--learning-rate", pa.learning_rate, "Boosting shrinkage");
  predict->add_option("--gb-max-depth", pa.gb_max_depth, "Boosted tree depth");
  predict->add_option("--subsample", pa.subsample, "Boosting row subsample");
  predict->add_option("--hybrid-weight", pa.hybrid_weight, "Weight of the forest in the hybrid");

  auto* version = app.add_subcommand("version", "Print version information");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (app.count("--seed")) g.seed = seed;

  try {
    if (*analyze) return cmd_trace_analyze(g, aa);
    if (*gen) return cmd_workload_gen(g, ga);
    if (*run) return cmd_sim_run(g, manifest, threads);
    if (*predict) return cmd_predict(g, pa);
    if (*version) return cmd_version(g);
  } catch (const adae::Error& e) {
    std::cerr << "adae: " << e.what() << "\n";
    return e.kind() == adae::Error::Kind::environment ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "adae: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
