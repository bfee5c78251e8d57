#include "adae/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "adae/error.hpp"
#include "adae/kernels.hpp"
#include "adae/rng.hpp"

namespace adae {

using ojson = nlohmann::ordered_json;

std::string_view feature_mode_name(FeatureMode m) {
  return m == FeatureMode::paper_faithful ? "paper-faithful" : "extended";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "paper-faithful" || name == "paper_faithful") return FeatureMode::paper_faithful;
  if (name == "extended") return FeatureMode::extended;
  throw ValidationError("unknown feature mode '" + std::string(name) + "'", "feature_mode");
}

namespace {

double strategy_code(std::string_view s) {
  if (s == "single_node") return 0.0;
  if (s == "round_robin") return 1.0;
  if (s == "equal_utilization") return 2.0;
  if (s == "max_distribution") return 3.0;
  return -1.0;
}

double clamp01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

}  // namespace

std::vector<double> feature_values(const FeatureVector& f, FeatureMode mode) {
  std::vector<double> v{f.utilization, f.lambda, f.mu, f.expected_output_latency};
  if (mode == FeatureMode::extended) {
    v.insert(v.end(), {f.cov, f.node_count, f.link_latency, strategy_code(f.strategy_id)});
  }
  return v;
}

std::vector<std::string> feature_names(FeatureMode mode) {
  std::vector<std::string> n{"utilization", "lambda", "mu", "expected_output_latency"};
  if (mode == FeatureMode::extended) n.insert(n.end(), {"cov", "node_count", "link_latency", "strategy_id"});
  return n;
}

double md1_mean_wait(double lambda, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("service rate must be positive", "mu");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("arrival rate must be non-negative", "lambda");
  const double rho = lambda / mu;
  if (rho >= 1.0) throw ValidationError("unstable queue: utilization " + std::to_string(rho) + " >= 1", "lambda");
  return rho / (2.0 * mu * (1.0 - rho));
}

double md1_attainment_slack(double lambda, double mu, double slack) {
  if (!(mu > 0.0)) return 0.0;
  const double rho = lambda / mu;
  if (!(rho < 1.0)) return 0.0;
  if (slack < 0.0) return 0.0;
  if (!(rho > 0.0)) return 1.0;
  // Tail rate ρ / Wq = 2μ(1 - ρ).
  const double decay = 2.0 * mu * (1.0 - rho);
  return clamp01(1.0 - rho * std::exp(-slack * decay));
}

double md1_attainment(double lambda, double mu, double slo_latency) {
  md1_mean_wait(lambda, mu);  // validates stability
  return md1_attainment_slack(lambda, mu, slo_latency - 1.0 / mu);
}

double segmented_md1_attainment(const SegmentedRateModel& rate_model, double mu, double slack) {
  double a = 0.0;
  for (std::size_t i = 0; i < rate_model.segment_count(); ++i) {
    a += rate_model.segment_length(i) / rate_model.duration() *
         md1_attainment_slack(rate_model.rates()[i], mu, slack);
  }
  return clamp01(a);
}

SegmentedRateModel row_rate_model(const TrainingRow& row) {
  if (row.segments.empty()) return SegmentedRateModel::constant(1.0, row.features.lambda);
  double total = 0.0;
  for (const auto& s : row.segments) {
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) throw ValidationError("segment weight must be >= 0", "segments");
    total += s.weight;
  }
  if (!(total > 0.0)) throw ValidationError("segment weights must sum to a positive value", "segments");
  std::vector<double> cps, rates;
  double acc = 0.0;
  for (const auto& s : row.segments) {
    if (s.weight <= 0.0) continue;
    const double start = acc / total;
    acc += s.weight;
    if (!rates.empty()) {
      const double prev = cps.empty() ? 0.0 : cps.back();
      if (!(start > prev) || start >= 1.0) continue;
      cps.push_back(start);
    }
    rates.push_back(s.lambda);
  }
  return SegmentedRateModel(1.0, std::move(cps), std::move(rates));
}

double md1_predict_row(const TrainingRow& row) {
  const auto& f = row.features;
  return segmented_md1_attainment(row_rate_model(row), f.mu, row.slo_latency - f.expected_output_latency);
}

std::string_view predictor_kind_name(PredictorKind k) {
  switch (k) {
    case PredictorKind::md1: return "md1";
    case PredictorKind::random_forest: return "random_forest";
    case PredictorKind::gradient_boost: return "gradient_boost";
    case PredictorKind::hybrid: return "hybrid";
  }
  return "unknown";
}

PredictorKind parse_predictor_kind(std::string_view name) {
  if (name == "md1") return PredictorKind::md1;
  if (name == "rf" || name == "random_forest") return PredictorKind::random_forest;
  if (name == "gb" || name == "gradient_boost") return PredictorKind::gradient_boost;
  if (name == "hybrid") return PredictorKind::hybrid;
  throw ValidationError("unknown model kind '" + std::string(name) + "'", "model");
}

namespace {

struct Design {
  FeatureMatrix x;
  std::vector<double> y;
};

Design design_matrix(const TrainingSet& data, FeatureMode mode) {
  Design d;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& r = data.rows[i];
    if (!(r.target >= 0.0 && r.target <= 1.0)) {
      throw ValidationError("target must lie in [0, 1]", "rows[" + std::to_string(i) + "].target");
    }
    const auto v = feature_values(r.features, mode);
    for (double f : v) {
      if (!std::isfinite(f)) throw ValidationError("non-finite feature", "rows[" + std::to_string(i) + "]");
    }
    d.x.push_row(v);
    d.y.push_back(r.target);
  }
  return d;
}

}  // namespace

PredictorModel PredictorModel::md1() {
  PredictorModel m;
  m.kind_ = PredictorKind::md1;
  m.hyper_ = "{}";
  return m;
}

PredictorModel PredictorModel::train_random_forest(const TrainingSet& data, const ForestParams& params,
                                                   std::uint64_t seed, FeatureMode mode) {
  if (data.rows.empty()) throw ValidationError("training set is empty", "train");
  if (params.trees < 1) throw ValidationError("forest needs at least one tree", "trees");
  if (params.tree.min_leaf < 1) throw ValidationError("min_leaf must be >= 1", "min_leaf");
  if (!(params.tree.feature_fraction > 0.0 && params.tree.feature_fraction <= 1.0)) {
    throw ValidationError("feature fraction must lie in (0, 1]", "feature_subset");
  }
  const Design d = design_matrix(data, mode);
  PredictorModel m;
  m.kind_ = PredictorKind::random_forest;
  m.mode_ = mode;
  m.seed_ = seed;
  const bool resample = params.bootstrap && params.trees > 1;
  const std::size_t n = d.y.size();
  for (std::size_t t = 0; t < params.trees; ++t) {
    Rng rng(mix_seed(seed, t));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = resample ? static_cast<std::size_t>(rng.below(n)) : i;
    m.trees_.push_back(RegressionTree::fit(d.x, d.y, std::move(rows), params.tree, &rng));
  }
  ojson h;
  h["trees"] = params.trees;
  h["max_depth"] = params.tree.max_depth;
  h["min_leaf"] = params.tree.min_leaf;
  h["feature_subset"] = params.tree.feature_fraction;
  h["bootstrap"] = params.bootstrap;
  m.hyper_ = h.dump();
  return m;
}

PredictorModel PredictorModel::train_gradient_boost(const TrainingSet& data, const BoostParams& params,
                                                    std::uint64_t seed, FeatureMode mode) {
  if (data.rows.empty()) throw ValidationError("training set is empty", "train");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw ValidationError("learning rate must lie in (0, 1]", "learning_rate");
  }
  if (!(params.subsample > 0.0 && params.subsample <= 1.0)) {
    throw ValidationError("subsample must lie in (0, 1]", "subsample");
  }
  const Design d = design_matrix(data, mode);
  PredictorModel m;
  m.kind_ = PredictorKind::gradient_boost;
  m.mode_ = mode;
  m.seed_ = seed;
  m.learning_rate_ = params.learning_rate;
  const std::size_t n = d.y.size();
  m.base_ = kernels::sum(d.y) / static_cast<double>(n);
  std::vector<double> pred(n, m.base_), residual(n);
  Rng rng(seed);
  const TreeParams tp{params.max_depth, params.min_leaf, 1.0};
  for (std::size_t round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = d.y[i] - pred[i];
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    if (params.subsample < 1.0) {
      const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)));
      for (std::size_t i = 0; i < k; ++i) std::swap(rows[i], rows[i + static_cast<std::size_t>(rng.below(n - i))]);
      rows.resize(k);
      std::sort(rows.begin(), rows.end());
    }
    RegressionTree tree = RegressionTree::fit(d.x, residual, std::move(rows), tp);
    for (std::size_t i = 0; i < n; ++i) pred[i] += m.learning_rate_ * tree.predict(d.x.row(i));
    m.trees_.push_back(std::move(tree));
  }
  ojson h;
  h["rounds"] = params.rounds;
  h["learning_rate"] = params.learning_rate;
  h["max_depth"] = params.max_depth;
  h["min_leaf"] = params.min_leaf;
  h["subsample"] = params.subsample;
  m.hyper_ = h.dump();
  return m;
}

PredictorModel PredictorModel::make_hybrid(PredictorModel forest, double weight) {
  if (forest.kind_ != PredictorKind::random_forest || forest.trees_.empty()) {
    throw ValidationError("hybrid needs a trained random forest", "forest");
  }
  if (!(weight >= 0.0 && weight <= 1.0)) throw ValidationError("hybrid weight must lie in [0, 1]", "weight");
  forest.kind_ = PredictorKind::hybrid;
  forest.hybrid_weight_ = weight;
  ojson h = ojson::parse(forest.hyper_);
  h["hybrid_weight"] = weight;
  forest.hyper_ = h.dump();
  return forest;
}

double PredictorModel::learned(const FeatureVector& f) const {
  const auto v = feature_values(f, mode_);
  switch (kind_) {
    case PredictorKind::md1: return 0.0;
    case PredictorKind::random_forest:
    case PredictorKind::hybrid: {
      if (trees_.empty()) throw ValidationError("forest is untrained");
      double s = 0.0;
      for (const auto& t : trees_) s += t.predict(v);
      return s / static_cast<double>(trees_.size());
    }
    case PredictorKind::gradient_boost: {
      double s = base_;
      for (const auto& t : trees_) s += learning_rate_ * t.predict(v);
      return s;
    }
  }
  return 0.0;
}

double PredictorModel::predict(const TrainingRow& row) const {
  switch (kind_) {
    case PredictorKind::md1: return md1_predict_row(row);
    case PredictorKind::random_forest:
    case PredictorKind::gradient_boost: return clamp01(learned(row.features));
    case PredictorKind::hybrid:
      return clamp01(hybrid_weight_ * learned(row.features) + (1.0 - hybrid_weight_) * md1_predict_row(row));
  }
  return 0.0;
}

double hybrid_predict(const PredictorModel& forest, const FeatureVector& features,
                      const SegmentedRateModel& rate_model, double mu, double slo_latency, double weight) {
  if ((forest.kind() != PredictorKind::random_forest && forest.kind() != PredictorKind::hybrid) ||
      forest.trees().empty()) {
    throw ValidationError("hybrid prediction needs a trained forest", "forest");
  }
  if (!(mu > 0.0)) throw ValidationError("service rate must be positive", "mu");
  const double analytic = segmented_md1_attainment(rate_model, mu, slo_latency - 1.0 / mu);
  return clamp01(weight * forest.learned(features) + (1.0 - weight) * analytic);
}

std::string PredictorModel::to_json() const {
  ojson j;
  j["format"] = "adae-predictor-v1";
  j["kind"] = predictor_kind_name(kind_);
  j["feature_mode"] = feature_mode_name(mode_);
  j["features"] = feature_names(mode_);
  j["seed"] = seed_;
  j["hyperparameters"] = ojson::parse(hyper_.empty() ? "{}" : hyper_);
  if (kind_ == PredictorKind::gradient_boost) {
    j["base"] = base_;
    j["learning_rate"] = learning_rate_;
  }
  if (kind_ == PredictorKind::hybrid) j["hybrid_weight"] = hybrid_weight_;
  j["trees"] = ojson::array();
  for (const auto& t : trees_) j["trees"].push_back(t.to_json());
  return j.dump(1) + "\n";
}

PredictorModel PredictorModel::from_json(const std::string& text) {
  try {
    const ojson j = ojson::parse(text);
    if (j.value("format", "") != "adae-predictor-v1") throw ValidationError("not a predictor document", "format");
    PredictorModel m;
    m.kind_ = parse_predictor_kind(j.at("kind").get<std::string>());
    m.mode_ = parse_feature_mode(j.at("feature_mode").get<std::string>());
    m.seed_ = j.at("seed").get<std::uint64_t>();
    m.hyper_ = j.at("hyperparameters").dump();
    m.base_ = j.value("base", 0.0);
    m.learning_rate_ = j.value("learning_rate", 1.0);
    m.hybrid_weight_ = j.value("hybrid_weight", 0.5);
    for (const auto& t : j.at("trees")) m.trees_.push_back(RegressionTree::from_json(t));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("predictor document: ") + e.what());
  }
}

EvaluationResult evaluate_predictions(std::span<const double> predicted, std::span<const double> actual) {
  if (actual.empty()) throw ValidationError("test set is empty", "test");
  if (predicted.size() != actual.size()) throw ValidationError("prediction/target length mismatch");
  EvaluationResult r;
  r.rows = actual.size();
  double rel = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double err = std::fabs(predicted[i] - actual[i]);
    if (actual[i] > 0.0) {
      rel += err / actual[i];
    } else {
      rel += err;
      ++r.absolute_fallback_rows;
    }
  }
  r.relative_error_pct = 100.0 * rel / static_cast<double>(r.rows);
  r.mean_absolute_error = kernels::sum_abs_diff(predicted, actual) / static_cast<double>(r.rows);
  return r;
}

EvaluationResult evaluate(const PredictorModel& model, const TrainingSet& test) {
  std::vector<double> pred, actual;
  for (const auto& row : test.rows) {
    pred.push_back(model.predict(row));
    actual.push_back(row.target);
  }
  return evaluate_predictions(pred, actual);
}

}  // namespace adae
