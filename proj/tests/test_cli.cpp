#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <set>
#include <sstream>

#include "adae/burst_model.hpp"
#include "adae/predictor.hpp"
#include "adae/sim_engine.hpp"
#include "adae/trace_io.hpp"

using namespace adae;
namespace fs = std::filesystem;

namespace {

const std::string kSrc = ADAE_SOURCE_DIR;

struct Result {
  int code = -1;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adae_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Result cli(const std::string& args, const fs::path& dir) {
  const std::string out = (dir / "stdout.txt").string();
  const std::string err = (dir / "stderr.txt").string();
  const std::string cmd = std::string("\"") + ADAE_CLI + "\" " + args + " >\"" + out + "\" 2>\"" + err + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l[0] != '#') out.push_back(l);
  }
  return out;
}

}  // namespace

TEST_CASE("version") {
  const fs::path d = scratch("version");
  const Result r = cli("version", d);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("adae 0.1.0\n", 0) == 0);
  CHECK(r.out.find("mt19937_64") != std::string::npos);
  CHECK(cli("--quiet version", d).out.empty());
}

TEST_CASE("usage errors exit 2") {
  const fs::path d = scratch("usage");
  CHECK(cli("frobnicate", d).code == 2);
  CHECK(cli("trace analyze", d).code == 2);
  CHECK(cli("--seed notanumber version", d).code == 2);
}

TEST_CASE("trace analyze") {
  const fs::path d = scratch("analyze");

  SUBCASE("missing file") {
    const Result r = cli("trace analyze " + q(d / "missing.csv"), d);
    CHECK(r.code == 2);
    CHECK(r.err.find("no such trace") != std::string::npos);
  }

  SUBCASE("deterministic arrivals") {
    std::string csv = "timestamp\n";
    for (int i = 0; i < 50; ++i) csv += std::to_string(i) + "\n";
    write_text_file((d / "det.csv").string(), csv);
    const Result r = cli("--out " + q(d / "out") + " trace analyze " + q(d / "det.csv"), d);
    CHECK(r.code == 0);
    CHECK(r.out.find("CoV        0.000\n") != std::string::npos);
    CHECK(fs::exists(d / "out" / "det.model.json"));
  }

  SUBCASE("two-rate fixture gives two segments") {
    const SegmentedRateModel two(150.0, {100.0}, {2.0, 10.0});
    write_text_file((d / "two.json").string(), rate_model_to_json(two));
    REQUIRE(cli("--seed 11 workload gen --model " + q(d / "two.json") + " --output " + q(d / "two.csv"), d).code == 0);
    const Result r = cli("trace analyze " + q(d / "two.csv") + " --output " + q(d / "fit.json"), d);
    CHECK(r.code == 0);
    const SegmentedRateModel fit = rate_model_from_json(read_text_file((d / "fit.json").string()));
    CHECK(fit.segment_count() == 2);
    CHECK(std::abs(fit.change_points()[0] - 100.0) <= 2.0 * 150.0 / 200.0);
  }

  SUBCASE("parse errors") {
    write_text_file((d / "bad.csv").string(), "timestamp\n1\nxyz\n");
    const Result r = cli("trace analyze " + q(d / "bad.csv"), d);
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
    CHECK(r.out.empty());
  }
}

TEST_CASE("workload gen") {
  const fs::path d = scratch("gen");
  const std::string model = q(fs::path(kSrc) / "data/rates/adae2.json");

  SUBCASE("target utilization") {
    const Result r = cli("--seed 5 workload gen --model " + model +
                             " --target-utilization 0.8 --service-rate 10 --output " + q(d / "w.csv"),
                         d);
    REQUIRE(r.code == 0);
    const ArrivalTrace t = read_trace_file((d / "w.csv").string());
    const double rate = static_cast<double>(t.size()) / t.duration();
    // Poisson count over 600 s at 8 req/s: sd ≈ 0.115 req/s
    CHECK(std::abs(rate - 8.0) <= 0.5);
    const std::string text = read_text_file((d / "w.csv").string());
    CHECK(text.find("# seed=5\n") != std::string::npos);
    CHECK(text.find("# generator=") != std::string::npos);
    CHECK(text.find("# model_hash=") != std::string::npos);
  }

  SUBCASE("byte-identical reruns") {
    const std::string args = "--seed 9 workload gen --model " + model + " --scale-factor 2 --output ";
    REQUIRE(cli(args + q(d / "a.csv"), d).code == 0);
    REQUIRE(cli(args + q(d / "b.csv"), d).code == 0);
    CHECK(read_text_file((d / "a.csv").string()) == read_text_file((d / "b.csv").string()));
  }

  SUBCASE("scaling modes on a trace") {
    const std::string trace = q(fs::path(kSrc) / "data/traces/camera-trap.csv");
    const ArrivalTrace base = read_trace_file(kSrc + "/data/traces/camera-trap.csv");
    REQUIRE(cli("workload gen --trace " + trace + " --mode independent --scale-factor 3 --output " +
                    q(d / "ind.csv"),
                d)
                .code == 0);
    CHECK(read_trace_file((d / "ind.csv").string()).size() == 3 * base.size());
    REQUIRE(cli("workload gen --trace " + trace + " --mode correlated --scale-factor 2 --output " +
                    q(d / "cor.csv"),
                d)
                .code == 0);
    CHECK(read_trace_file((d / "cor.csv").string()).size() > base.size());
  }

  SUBCASE("rejected inputs") {
    const std::string trace = q(fs::path(kSrc) / "data/traces/camera-trap.csv");
    CHECK(cli("workload gen --trace " + trace + " --mode correlated --scale-factor 0.5", d).code == 2);
    CHECK(cli("workload gen --trace " + trace + " --mode independent --scale-factor 2.5", d).code == 2);
    CHECK(cli("workload gen --model " + model + " --scale-factor 2 --target-utilization 0.5 --service-rate 1",
              d)
              .code == 2);
    CHECK(cli("workload gen --model " + model + " --target-utilization 1.5 --service-rate 1", d).code == 2);
    CHECK(cli("workload gen --model " + q(d / "none.json"), d).code == 2);
  }
}

TEST_CASE("sim run") {
  const fs::path d = scratch("sim");
  nlohmann::json m;
  m["schema_version"] = 1;
  m["name"] = "tiny";
  m["cluster"] = kSrc + "/data/clusters/edge-2node.json";
  m["seed"] = 3;
  m["duration"] = 120;
  m["strategies"] = {"single_node", "equal_utilization"};
  m["axes"] = {{"traffic", {0.5, 1.0}}};
  m["workloads"] = nlohmann::json::array(
      {{{"name", "mix"},
        {"components", {{{"rate_model", kSrc + "/data/rates/adae1.json"}, {"share", 0.3}, {"workflow_id", "ADAE1"}},
                        {{"rate_model", kSrc + "/data/rates/adae2.json"}, {"share", 0.7}, {"workflow_id", "ADAE2"}}}}}});
  write_text_file((d / "tiny.json").string(), m.dump(2));

  SUBCASE("manifest run writes a summary row per cell") {
    const Result r = cli("--out " + q(d / "res") + " sim run " + q(d / "tiny.json"), d);
    REQUIRE(r.code == 0);
    const auto rows = data_lines(read_text_file((d / "res" / "summary.csv").string()));
    CHECK(rows.size() == 1 + 4);
    CHECK(fs::exists(d / "res" / "results.json"));
    CHECK(r.out.find("4/4 cells simulated") != std::string::npos);
  }

  SUBCASE("invalid manifest") {
    write_text_file((d / "bad.json").string(), "{\"schema_version\": 1}");
    CHECK(cli("sim run " + q(d / "bad.json"), d).code == 2);
    CHECK(cli("sim run " + q(d / "missing.json"), d).code == 2);
  }

  SUBCASE("unwritable output directory") {
    write_text_file((d / "blocker").string(), "x");
    CHECK(cli("--out " + q(d / "blocker" / "res") + " sim run " + q(d / "tiny.json"), d).code == 3);
  }
}

TEST_CASE("predict") {
  const fs::path d = scratch("predict");
  // Single-node M/D/1 scenarios straight from the simulator.
  const ClusterSpec base({{"n0", 1.0, 1e9}}, {}, {{"m", {{1.0, 1.0, 1.0}}}}, {{"w", "m", 2.0, 0.9}});
  TrainingSet set;
  std::uint64_t seed = 40;
  for (double rho : {0.2, 0.4, 0.6, 0.75}) {
    const ArrivalTrace t = generate({SegmentedRateModel(50000.0, {}, {rho}), seed++, "w"});
    for (double slack : {1.0, 2.0, 3.0}) {
      const ClusterSpec c(base.nodes(), base.link(), base.models(), {{"w", "m", 1.0 + slack, 0.9}});
      const SimReport r = run({c, place_single_node(c), t, seed});
      TrainingRow row;
      row.features = {rho, rho, 1.0, 1.0, 1.0, 1.0, 0.0, "single_node"};
      row.slo_latency = 1.0 + slack;
      row.target = r.per_workflow[0].slo_attainment;
      set.rows.push_back(row);
    }
  }
  write_text_file((d / "set.csv").string(), training_set_to_csv(set));
  const std::string io = " --train " + q(d / "set.csv") + " --test " + q(d / "set.csv");

  SUBCASE("md1 without training") {
    const Result r = cli("--out " + q(d / "o") + " predict --model md1" + io, d);
    REQUIRE(r.code == 0);
    const auto lines = data_lines(r.out);
    REQUIRE(lines.size() == 2);
    std::istringstream row(lines[1]);
    std::string name;
    double err = 0.0;
    row >> name >> err;
    CHECK(name == "md1");
    CHECK(err < 5.0);
    CHECK(fs::exists(d / "o" / "model_md1.json"));
  }

  SUBCASE("four models sorted by error") {
    const Result r = cli("--seed 4 --out " + q(d / "o") + " predict --trees 20 --rounds 50" + io, d);
    REQUIRE(r.code == 0);
    const auto lines = data_lines(r.out);
    REQUIRE(lines.size() == 5);
    double prev = -1.0;
    std::set<std::string> names;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      std::istringstream row(lines[i]);
      std::string name;
      double err = 0.0;
      row >> name >> err;
      names.insert(name);
      CHECK(err >= prev);
      prev = err;
    }
    CHECK(names == std::set<std::string>{"md1", "random_forest", "gradient_boost", "hybrid"});
    for (const char* f : {"model_md1.json", "model_random_forest.json", "model_gradient_boost.json",
                          "model_hybrid.json"}) {
      CHECK(fs::exists(d / "o" / f));
    }
  }

  SUBCASE("a depth-0 single tree predicts the global mean") {
    const Result r = cli("--out " + q(d / "o") + " predict --model rf --trees 1 --max-depth 0 --model-out " +
                             q(d / "rf.json") + io,
                         d);
    REQUIRE(r.code == 0);
    double mean = 0.0;
    for (const auto& row : set.rows) mean += row.target;
    mean /= static_cast<double>(set.rows.size());
    const PredictorModel m = PredictorModel::from_json(read_text_file((d / "rf.json").string()));
    for (const auto& row : set.rows) CHECK(m.predict(row) == doctest::Approx(mean));
    std::vector<double> pred(set.rows.size(), mean), actual;
    for (const auto& row : set.rows) actual.push_back(row.target);
    const EvaluationResult baseline = evaluate_predictions(pred, actual);
    std::istringstream row(data_lines(r.out).at(1));
    std::string name;
    double err = 0.0;
    row >> name >> err;
    CHECK(err == doctest::Approx(baseline.relative_error_pct).epsilon(0.001));
  }

  SUBCASE("schema mismatch and empty sets") {
    write_text_file((d / "wrong.csv").string(), "a,b\n1,2\n");
    CHECK(cli("predict --train " + q(d / "wrong.csv") + " --test " + q(d / "set.csv"), d).code == 2);
    write_text_file((d / "empty.csv").string(), training_set_to_csv({}));
    CHECK(cli("predict --train " + q(d / "set.csv") + " --test " + q(d / "empty.csv"), d).code == 2);
    CHECK(cli("predict --train " + q(d / "none.csv") + " --test " + q(d / "set.csv"), d).code == 2);
    CHECK(cli("predict --model nn" + io, d).code == 2);
  }
}
