#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "svy/estimators.hpp"
#include "svy/rng.hpp"
#include "svy/sampling.hpp"
#include "svy/types.hpp"

namespace svy {

// Flat node record. Internal nodes send x to left when x[feature] < threshold
// and to right otherwise; leaves carry the design-weighted mean of their
// sample y-values.
struct TreeNode {
  Index feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf coefficient
  Index count = 0;     // sample units (with bootstrap multiplicity) in the node
  int region = -1;     // leaf id, 0..leaves-1

  bool is_leaf() const noexcept { return feature < 0; }
};

class RegressionTree final : public PredictorModel {
 public:
  RegressionTree(std::vector<TreeNode> nodes, int leaves, int discipline_exceptions, int constant_y_exceptions);

  double predict(std::span<const double> x) const override;
  Vector predict_rows(const Matrix& x) const override;

  // Region id of the leaf reached by row i of x.
  int region_of(const Matrix& x, Index i) const;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  int leaf_count() const noexcept { return leaves_; }
  std::vector<Index> leaf_sizes() const;
  // Leaves whose size broke [n0, 2n0-1] because no admissible positive-gain
  // split existed; constant_y_exceptions counts those where y was constant.
  int discipline_exceptions() const noexcept { return discipline_exceptions_; }
  int constant_y_exceptions() const noexcept { return constant_y_exceptions_; }

 private:
  std::vector<TreeNode> nodes_;
  int leaves_;
  int discipline_exceptions_;
  int constant_y_exceptions_;
};

struct Split {
  Index feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best (feature, threshold) by variance reduction
//   L(l, z) = (1/#A) sum_A [(y - ybar_A)^2 - (y - ybar_child)^2]
// over midpoints between consecutive distinct values, both children holding
// at least n0 units. units are row positions into x/y (repeats allowed).
// Ties go to the lowest feature, then the smallest threshold.
std::optional<Split> best_split(std::span<const Index> units, const Matrix& x, const Vector& y,
                                std::span<const Index> candidate_features, Index n0);

struct TreeOptions {
  Index n0 = 5;
  std::optional<Index> p0;             // features drawn per split; unset = all
  std::vector<Index> forced_features;  // always added to the drawn features
};

// Grows a tree on the sample rows xs/ys. rng is only consulted when
// p0 < p.
std::shared_ptr<const RegressionTree> grow_tree(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                                                const TreeOptions& options, Stream* rng = nullptr);
// Same, on an explicit list of sample positions (bootstrap resample).
std::shared_ptr<const RegressionTree> grow_tree_on(std::span<const Index> positions, const Vector& weights,
                                                   const Matrix& xs, const Vector& ys, const TreeOptions& options,
                                                   Stream* rng);

FittedPredictor fit_tree(const DrawnSample& sample, const Matrix& xs, const Vector& ys, const TreeOptions& options,
                         Stream* rng = nullptr);

// sum_U f_tree(x_i); the sample correction is reported in diagnostics
// ("correction") and vanishes for a tree fitted on this sample.
MAEstimate tree_ma_estimate(const Matrix& x, const DrawnSample& sample, std::span<const double> y,
                            const RegressionTree& tree);
MAEstimate tree_ma_estimate(const FinitePopulation& pop, const DrawnSample& sample, const RegressionTree& tree);

struct ForestSpec {
  int trees = 1000;
  Index n0 = 5;
  Index p0 = 0;  // 0: floor(sqrt(p))
  bool bootstrap = true;
  std::vector<Index> forced_features;
  // Resample proportionally to 1/pi instead of uniformly.
  bool pi_weighted_bootstrap = false;
};

class RandomForest final : public PredictorModel {
 public:
  explicit RandomForest(std::vector<std::shared_ptr<const RegressionTree>> trees) : trees_(std::move(trees)) {}

  double predict(std::span<const double> x) const override;
  Vector predict_rows(const Matrix& x) const override;
  // N x B matrix of per-tree predictions.
  Matrix tree_predictions(const Matrix& x) const;

  const std::vector<std::shared_ptr<const RegressionTree>>& trees() const noexcept { return trees_; }

 private:
  std::vector<std::shared_ptr<const RegressionTree>> trees_;
};

// Tree b uses rng.substream(b); threads > 1 builds trees concurrently with
// identical results.
FittedPredictor fit_forest(const DrawnSample& sample, const Matrix& xs, const Vector& ys, const ForestSpec& spec,
                           const Stream& rng, int threads = 1);

// Generic model-assisted estimator with the averaged forest prediction.
// diagnostics["bagged_mean"] is the mean of the per-tree estimators.
MAEstimate forest_ma_estimate(const Matrix& x, const DrawnSample& sample, std::span<const double> y,
                              const RandomForest& forest);
MAEstimate forest_ma_estimate(const FinitePopulation& pop, const DrawnSample& sample, const RandomForest& forest);

// Per-tree model-assisted estimators t_tree^(b).
std::vector<double> forest_tree_estimates(const Matrix& x, const DrawnSample& sample, std::span<const double> y,
                                          const RandomForest& forest);

Index default_p0(Index p);

}  // namespace svy
