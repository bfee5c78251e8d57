#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace adae {

class Rng;

// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t cols = 0;
  std::vector<double> data;

  std::size_t rows() const { return cols ? data.size() / cols : 0; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  void push_row(std::span<const double> values);
};

struct TreeParams {
  int max_depth = -1;            // -1: unlimited; 0: a single leaf
  std::size_t min_leaf = 1;      // minimum rows per leaf
  double feature_fraction = 1.0; // share of features tried at each split
};

// CART regression tree: variance-reduction splits, mean-valued leaves.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
  };

  // Fits on the given row indices (repeats allowed, as in bootstrap
  // samples). `rng` is needed only when feature_fraction < 1.
  static RegressionTree fit(const FeatureMatrix& x, std::span<const double> y, std::vector<std::size_t> rows,
                            const TreeParams& params, Rng* rng = nullptr);

  double predict(std::span<const double> features) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;

  nlohmann::ordered_json to_json() const;
  static RegressionTree from_json(const nlohmann::ordered_json& j);

 private:
  std::vector<Node> nodes_;
};

}  // namespace adae
