#include "adae/regression_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <json.hpp>

#include "adae/error.hpp"
#include "adae/kernels.hpp"
#include "adae/rng.hpp"

namespace adae {

void FeatureMatrix::push_row(std::span<const double> values) {
  if (cols == 0) cols = values.size();
  if (values.size() != cols) throw ValidationError("feature row width mismatch");
  data.insert(data.end(), values.begin(), values.end());
}

namespace {

struct Builder {
  const FeatureMatrix& x;
  std::span<const double> y;
  const TreeParams& params;
  Rng* rng;
  std::vector<RegressionTree::Node>& nodes;
  std::vector<double> scratch;

  double mean_of(const std::vector<std::size_t>& rows) {
    scratch.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) scratch[i] = y[rows[i]];
    return kernels::sum(scratch) / static_cast<double>(rows.size());
  }

  double sse_of(const std::vector<std::size_t>& rows, double mean) {
    scratch.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) scratch[i] = y[rows[i]];
    return kernels::sum_sq_dev(scratch, mean);
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> f(x.cols);
    std::iota(f.begin(), f.end(), 0);
    if (params.feature_fraction >= 1.0 || !rng) return f;
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(params.feature_fraction * static_cast<double>(x.cols))));
    for (std::size_t i = 0; i < k && i + 1 < f.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng->below(f.size() - i));
      std::swap(f[i], f[j]);
    }
    f.resize(k);
    std::sort(f.begin(), f.end());
    return f;
  }

  int build(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    const double mean = mean_of(rows);
    nodes[static_cast<std::size_t>(id)].value = mean;
    if (params.max_depth >= 0 && depth >= params.max_depth) return id;
    if (rows.size() < 2 * params.min_leaf) return id;
    const double parent_sse = sse_of(rows, mean);
    if (!(parent_sse > 0.0)) return id;

    double best_sse = parent_sse;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = rows;
    for (std::size_t f : candidate_features()) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x.at(a, f) < x.at(b, f); });
      double total = 0.0, total_sq = 0.0;
      for (std::size_t r : order) {
        total += y[r];
        total_sq += y[r] * y[r];
      }
      double left = 0.0, left_sq = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const double v = y[order[i]];
        left += v;
        left_sq += v * v;
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        const double xa = x.at(order[i], f), xb = x.at(order[i + 1], f);
        if (!(xa < xb)) continue;
        const double right = total - left, right_sq = total_sq - left_sq;
        const double sse = (left_sq - left * left / static_cast<double>(nl)) +
                           (right_sq - right * right / static_cast<double>(nr));
        if (sse < best_sse - 1e-12 * (parent_sse + 1e-300)) {
          best_sse = sse;
          best_feature = static_cast<int>(f);
          best_threshold = xa + (xb - xa) * 0.5;
          if (!(best_threshold < xb)) best_threshold = xa;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows) {
      (x.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? lrows : rrows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes[static_cast<std::size_t>(id)].feature = best_feature;
    nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = build(std::move(lrows), depth + 1);
    const int r = build(std::move(rrows), depth + 1);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace

RegressionTree RegressionTree::fit(const FeatureMatrix& x, std::span<const double> y, std::vector<std::size_t> rows,
                                   const TreeParams& params, Rng* rng) {
  if (rows.empty()) throw ValidationError("cannot fit a tree on zero rows");
  if (y.size() != x.rows()) throw ValidationError("target length does not match feature rows");
  RegressionTree tree;
  Builder b{x, y, params, rng, tree.nodes_, {}};
  b.build(std::move(rows), 0);
  return tree;
}

double RegressionTree::predict(std::span<const double> features) const {
  std::size_t i = 0;
  for (;;) {
    const Node& n = nodes_[i];
    if (n.feature < 0) return n.value;
    i = static_cast<std::size_t>(features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

nlohmann::ordered_json RegressionTree::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& n : nodes_) {
    if (n.feature < 0) j.push_back({{"value", n.value}});
    else j.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                      {"value", n.value}});
  }
  return j;
}

RegressionTree RegressionTree::from_json(const nlohmann::ordered_json& j) {
  RegressionTree t;
  for (const auto& jn : j) {
    Node n;
    n.value = jn.at("value").get<double>();
    if (jn.contains("feature")) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    }
    t.nodes_.push_back(n);
  }
  const int count = static_cast<int>(t.nodes_.size());
  if (count == 0) throw ValidationError("tree has no nodes");
  for (int i = 0; i < count; ++i) {
    const Node& n = t.nodes_[static_cast<std::size_t>(i)];
    if (n.feature >= 0 && (n.left <= i || n.right <= i || n.left >= count || n.right >= count)) {
      throw ValidationError("tree node references out of range");
    }
  }
  return t;
}

}  // namespace adae
