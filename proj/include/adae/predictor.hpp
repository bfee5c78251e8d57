#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adae/burst_model.hpp"
#include "adae/regression_tree.hpp"

namespace adae {

// Configuration features of one scenario (one workflow in one sweep cell).
struct FeatureVector {
  double utilization = 0.0;              // ρ at the bottleneck node
  double lambda = 0.0;                   // effective arrivals/s at the bottleneck
  double mu = 0.0;                       // bottleneck service rate, requests/s
  double expected_output_latency = 0.0;  // zero-queueing pipeline latency, s
  double cov = 0.0;
  double node_count = 1.0;
  double link_latency = 0.0;
  std::string strategy_id;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class FeatureMode { paper_faithful, extended };

std::string_view feature_mode_name(FeatureMode m);
FeatureMode parse_feature_mode(std::string_view name);
// paper_faithful: utilization, lambda, mu, expected_output_latency.
// extended adds cov, node_count, link_latency and the strategy code.
std::vector<double> feature_values(const FeatureVector& f, FeatureMode mode);
std::vector<std::string> feature_names(FeatureMode mode);

// Arrival-rate shape: (fraction of the horizon, arrival rate) per segment.
struct RateSegment {
  double weight = 1.0;
  double lambda = 0.0;

  friend bool operator==(const RateSegment&, const RateSegment&) = default;
};

struct TrainingRow {
  FeatureVector features;
  double slo_latency = 0.0;
  std::vector<RateSegment> segments;  // empty: one segment at features.lambda
  double target = 0.0;                // observed SLO attainment

  friend bool operator==(const TrainingRow&, const TrainingRow&) = default;
};

struct TrainingSet {
  std::vector<TrainingRow> rows;
};

inline constexpr std::string_view kTrainingSchema = "adae-training-v1";

// CSV with a `# schema=adae-training-v1` line and the fixed header
// utilization,lambda,mu,expected_output_latency,cov,node_count,link_latency,
// strategy_id,slo_latency,segments,target   (segments: "w:λ;w:λ").
std::string training_set_to_csv(const TrainingSet& set, const std::vector<std::string>& comments = {});
TrainingSet training_set_from_csv(std::string_view raw);

// --- analytic M/D/1 -------------------------------------------------------

// Wq = ρ / (2μ(1-ρ)). Throws ValidationError when ρ ≥ 1 or μ ≤ 0.
double md1_mean_wait(double lambda, double mu);

// P(sojourn ≤ slo) with the exponential tail P(Wq > t) = ρ·exp(-t·ρ/Wq).
double md1_attainment(double lambda, double mu, double slo_latency);
// Same with the waiting budget given directly; 0 when slack < 0 or ρ ≥ 1.
double md1_attainment_slack(double lambda, double mu, double slack);

// --- learned models --------------------------------------------------------

enum class PredictorKind { md1, random_forest, gradient_boost, hybrid };

std::string_view predictor_kind_name(PredictorKind k);
PredictorKind parse_predictor_kind(std::string_view name);  // md1|rf|gb|hybrid or full names

struct ForestParams {
  std::size_t trees = 100;
  TreeParams tree{-1, 2, 1.0};
  // Rows are resampled with replacement per tree; a one-tree forest is fitted
  // on the full data.
  bool bootstrap = true;
};

struct BoostParams {
  std::size_t rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t min_leaf = 1;
  double subsample = 1.0;  // < 1: row subsample per round without replacement
};

class PredictorModel {
 public:
  PredictorKind kind() const { return kind_; }
  FeatureMode feature_mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  double hybrid_weight() const { return hybrid_weight_; }

  // Predicted attainment, clamped to [0, 1].
  double predict(const TrainingRow& row) const;
  // Raw learned output (forest mean / boosted sum) without the analytic part.
  double learned(const FeatureVector& f) const;

  std::string to_json() const;
  static PredictorModel from_json(const std::string& text);

  static PredictorModel md1();
  static PredictorModel train_random_forest(const TrainingSet& data, const ForestParams& params, std::uint64_t seed,
                                            FeatureMode mode = FeatureMode::paper_faithful);
  static PredictorModel train_gradient_boost(const TrainingSet& data, const BoostParams& params, std::uint64_t seed,
                                             FeatureMode mode = FeatureMode::paper_faithful);
  static PredictorModel make_hybrid(PredictorModel forest, double weight = 0.5);

 private:
  PredictorKind kind_ = PredictorKind::md1;
  FeatureMode mode_ = FeatureMode::paper_faithful;
  std::uint64_t seed_ = 0;
  std::vector<RegressionTree> trees_;
  double base_ = 0.0;           // boosting intercept
  double learning_rate_ = 1.0;  // boosting shrinkage
  double hybrid_weight_ = 0.5;  // weight of the learned part
  std::string hyper_;           // hyperparameters as JSON text
};

// Burst-aware analytic estimate: Σ (dᵢ/T) · md1_attainment_slack(λᵢ, μ, slack),
// segments with λᵢ ≥ μ contributing 0.
double segmented_md1_attainment(const SegmentedRateModel& rate_model, double mu, double slack);

// clamp(w · forest + (1 - w) · A_md1) with A_md1 from the rate model and
// slack = slo_latency - 1/mu.
double hybrid_predict(const PredictorModel& forest, const FeatureVector& features,
                      const SegmentedRateModel& rate_model, double mu, double slo_latency, double weight = 0.5);

// Analytic prediction for one row of a training set.
double md1_predict_row(const TrainingRow& row);

// Rate model over [0, 1] (unit horizon) from a row's segments.
SegmentedRateModel row_rate_model(const TrainingRow& row);

struct EvaluationResult {
  double relative_error_pct = 0.0;  // mean |pred - actual| / actual × 100
  double mean_absolute_error = 0.0;
  std::size_t rows = 0;
  std::size_t absolute_fallback_rows = 0;  // actual == 0: |pred - actual| used
};

EvaluationResult evaluate(const PredictorModel& model, const TrainingSet& test);
EvaluationResult evaluate_predictions(std::span<const double> predicted, std::span<const double> actual);

}  // namespace adae
