#include "svy/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "svy/error.hpp"
#include "svy/kernels.hpp"
#include "svy/linalg.hpp"

namespace svy {

namespace {

constexpr const char* kModule = "trees";

bool constant_values(std::span<const Index> units, const Vector& y) {
  const double first = y[units.front()];
  return std::all_of(units.begin(), units.end(), [&](Index u) { return y[u] == first; });
}

std::vector<Index> draw_features(Index p, const TreeOptions& options, Stream* rng) {
  std::vector<Index> features;
  if (options.p0 && *options.p0 < p) {
    if (rng == nullptr) throw ParameterError(kModule, "feature subsampling needs a random stream");
    std::vector<Index> pool(static_cast<std::size_t>(p));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index k = 0; k < *options.p0; ++k) {
      const std::size_t j = static_cast<std::size_t>(k) + rng->index(static_cast<std::size_t>(p - k));
      std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
    }
    features.assign(pool.begin(), pool.begin() + *options.p0);
    features.insert(features.end(), options.forced_features.begin(), options.forced_features.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
  } else {
    features.resize(static_cast<std::size_t>(p));
    std::iota(features.begin(), features.end(), Index{0});
  }
  return features;
}

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, int leaves, int discipline_exceptions,
                               int constant_y_exceptions)
    : nodes_(std::move(nodes)),
      leaves_(leaves),
      discipline_exceptions_(discipline_exceptions),
      constant_y_exceptions_(constant_y_exceptions) {}

double RegressionTree::predict(std::span<const double> x) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] < node->threshold ? node->left
                                                                                                          : node->right)];
  }
  return node->value;
}

int RegressionTree::region_of(const Matrix& x, Index i) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[static_cast<std::size_t>(x(i, node->feature) < node->threshold ? node->left : node->right)];
  }
  return node->region;
}

Vector RegressionTree::predict_rows(const Matrix& x) const {
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const TreeNode* node = &nodes_.front();
    while (!node->is_leaf()) {
      node = &nodes_[static_cast<std::size_t>(x(i, node->feature) < node->threshold ? node->left : node->right)];
    }
    out[i] = node->value;
  }
  return out;
}

std::vector<Index> RegressionTree::leaf_sizes() const {
  std::vector<Index> sizes;
  for (const auto& node : nodes_) {
    if (node.is_leaf()) sizes.push_back(node.count);
  }
  return sizes;
}

std::optional<Split> best_split(std::span<const Index> units, const Matrix& x, const Vector& y,
                                std::span<const Index> candidate_features, Index n0) {
  const auto m = static_cast<Index>(units.size());
  if (n0 < 1 || m < 2 * n0 || constant_values(units, y)) return std::nullopt;

  double mean = 0.0;
  for (Index u : units) mean += y[u];
  mean /= static_cast<double>(m);

  std::vector<Index> sorted(units.begin(), units.end());
  std::optional<Split> best;
  for (Index feature : candidate_features) {
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](Index a, Index b) { return x(a, feature) < x(b, feature); });
    // With centered y the right-child sum is -left_sum, so
    // m * L = left_sum^2 / k + left_sum^2 / (m - k).
    double left_sum = 0.0;
    for (Index k = 1; k < m - n0 + 1; ++k) {
      left_sum += y[sorted[static_cast<std::size_t>(k - 1)]] - mean;
      if (k < n0) continue;
      const double lo = x(sorted[static_cast<std::size_t>(k - 1)], feature);
      const double hi = x(sorted[static_cast<std::size_t>(k)], feature);
      if (!(lo < hi)) continue;
      const double gain =
          (left_sum * left_sum / static_cast<double>(k) + left_sum * left_sum / static_cast<double>(m - k)) /
          static_cast<double>(m);
      if (!(gain > 0.0)) continue;
      if (!best || gain > best->gain) {
        double threshold = 0.5 * (lo + hi);
        if (!(threshold > lo)) threshold = hi;
        best = Split{feature, threshold, gain};
      }
    }
  }
  return best;
}

std::shared_ptr<const RegressionTree> grow_tree_on(std::span<const Index> positions, const Vector& weights,
                                                   const Matrix& xs, const Vector& ys, const TreeOptions& options,
                                                   Stream* rng) {
  if (positions.empty()) throw ParameterError(kModule, "cannot grow a tree on an empty sample");
  if (options.n0 < 1) throw ParameterError(kModule, "n0 must be >= 1");
  const Index p = xs.cols();
  if (options.p0 && (*options.p0 < 1 || *options.p0 > p)) throw ParameterError(kModule, "p0 must lie in [1, p]");
  for (Index f : options.forced_features) {
    if (f < 0 || f >= p) throw ParameterError(kModule, "forced feature out of range");
  }

  std::vector<TreeNode> nodes(1);
  std::vector<std::pair<int, std::vector<Index>>> stack;
  stack.emplace_back(0, std::vector<Index>(positions.begin(), positions.end()));
  int leaves = 0;
  int exceptions = 0;
  int constant_exceptions = 0;

  while (!stack.empty()) {
    auto [id, units] = std::move(stack.back());
    stack.pop_back();
    const auto m = static_cast<Index>(units.size());
    nodes[static_cast<std::size_t>(id)].count = m;

    std::optional<Split> split;
    if (m >= 2 * options.n0) {
      const auto features = draw_features(p, options, rng);
      split = best_split(units, xs, ys, features, options.n0);
      if (!split) {
        ++exceptions;
        if (constant_values(units, ys)) ++constant_exceptions;
      }
    }

    if (!split) {
      double wy = 0.0;
      double w = 0.0;
      for (Index u : units) {
        wy += weights[u] * ys[u];
        w += weights[u];
      }
      auto& leaf = nodes[static_cast<std::size_t>(id)];
      leaf.value = wy / w;
      leaf.region = leaves++;
      continue;
    }

    std::vector<Index> left, right;
    for (Index u : units) (xs(u, split->feature) < split->threshold ? left : right).push_back(u);
    const int left_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    auto& node = nodes[static_cast<std::size_t>(id)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left_id;
    node.right = left_id + 1;
    // Right first so the left subtree is expanded (and numbered) first.
    stack.emplace_back(left_id + 1, std::move(right));
    stack.emplace_back(left_id, std::move(left));
  }
  return std::make_shared<RegressionTree>(std::move(nodes), leaves, exceptions, constant_exceptions);
}

std::shared_ptr<const RegressionTree> grow_tree(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                                                const TreeOptions& options, Stream* rng) {
  if (xs.rows() != sample.size() || ys.size() != sample.size()) {
    throw InputError(kModule, "sample rows of x and y must match the sample size");
  }
  std::vector<Index> positions(static_cast<std::size_t>(sample.size()));
  std::iota(positions.begin(), positions.end(), Index{0});
  return grow_tree_on(positions, sample.weights, xs, ys, options, rng);
}

FittedPredictor fit_tree(const DrawnSample& sample, const Matrix& xs, const Vector& ys, const TreeOptions& options,
                         Stream* rng) {
  auto tree = grow_tree(sample, xs, ys, options, rng);
  Diagnostics diag{{"leaves", static_cast<double>(tree->leaf_count())},
                   {"discipline_exceptions", static_cast<double>(tree->discipline_exceptions())}};
  return FittedPredictor("cart", std::move(tree), diag);
}

MAEstimate tree_ma_estimate(const Matrix& x, const DrawnSample& sample, std::span<const double> y,
                            const RegressionTree& tree) {
  const Vector f = tree.predict_rows(x);
  MAEstimate generic = model_assisted_from_predictions(sample, f, y, "cart");
  MAEstimate est;
  est.method = "cart";
  est.n_used = sample.size();
  est.t_hat = generic.diagnostics.at("projection");
  est.diagnostics["correction"] = generic.diagnostics.at("correction");
  est.diagnostics["generic"] = generic.t_hat;
  return est;
}

MAEstimate tree_ma_estimate(const FinitePopulation& pop, const DrawnSample& sample, const RegressionTree& tree) {
  const Vector ys = gather(pop.y(), sample.indices);
  return tree_ma_estimate(pop.x(), sample, std::span<const double>(ys.data(), static_cast<std::size_t>(ys.size())),
                          tree);
}

double RandomForest::predict(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& tree : trees_) s += tree->predict(x);
  return s / static_cast<double>(trees_.size());
}

Matrix RandomForest::tree_predictions(const Matrix& x) const {
  Matrix out(x.rows(), static_cast<Index>(trees_.size()));
  for (std::size_t b = 0; b < trees_.size(); ++b) out.col(static_cast<Index>(b)) = trees_[b]->predict_rows(x);
  return out;
}

Vector RandomForest::predict_rows(const Matrix& x) const {
  Vector out = Vector::Zero(x.rows());
  for (const auto& tree : trees_) out += tree->predict_rows(x);
  return out / static_cast<double>(trees_.size());
}

Index default_p0(Index p) {
  auto r = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(p))));
  while (r * r > p) --r;
  while ((r + 1) * (r + 1) <= p) ++r;
  return std::max<Index>(1, r);
}

FittedPredictor fit_forest(const DrawnSample& sample, const Matrix& xs, const Vector& ys, const ForestSpec& spec,
                           const Stream& rng, int threads) {
  if (xs.rows() != sample.size() || ys.size() != sample.size()) {
    throw InputError(kModule, "sample rows of x and y must match the sample size");
  }
  if (spec.trees < 1) throw ParameterError(kModule, "forest needs B >= 1 trees");
  const Index p = xs.cols();
  const Index n = sample.size();
  TreeOptions options;
  options.n0 = spec.n0;
  options.p0 = spec.p0 == 0 ? default_p0(p) : spec.p0;
  options.forced_features = spec.forced_features;

  std::vector<std::shared_ptr<const RegressionTree>> trees(static_cast<std::size_t>(spec.trees));
  auto build = [&](int b) {
    Stream stream = rng.substream(static_cast<std::uint64_t>(b));
    std::vector<Index> positions(static_cast<std::size_t>(n));
    if (spec.bootstrap) {
      if (spec.pi_weighted_bootstrap) {
        std::discrete_distribution<Index> pick(sample.weights.data(), sample.weights.data() + n);
        for (auto& pos : positions) pos = pick(stream.engine());
      } else {
        for (auto& pos : positions) pos = static_cast<Index>(stream.index(static_cast<std::size_t>(n)));
      }
    } else {
      std::iota(positions.begin(), positions.end(), Index{0});
    }
    trees[static_cast<std::size_t>(b)] = grow_tree_on(positions, sample.weights, xs, ys, options, &stream);
  };

  const int workers = std::clamp(threads, 1, spec.trees);
  if (workers == 1) {
    for (int b = 0; b < spec.trees; ++b) build(b);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (int b = t; b < spec.trees; b += workers) build(b);
      });
    }
  }

  int exceptions = 0;
  for (const auto& tree : trees) exceptions += tree->discipline_exceptions();
  Diagnostics diag{{"trees", static_cast<double>(spec.trees)},
                   {"p0", static_cast<double>(*options.p0)},
                   {"n0", static_cast<double>(spec.n0)},
                   {"discipline_exceptions", static_cast<double>(exceptions)}};
  return FittedPredictor("rf", std::make_shared<RandomForest>(std::move(trees)), diag);
}

std::vector<double> forest_tree_estimates(const Matrix& x, const DrawnSample& sample, std::span<const double> y,
                                          const RandomForest& forest) {
  const Matrix f = forest.tree_predictions(x);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(f.cols()));
  for (Index b = 0; b < f.cols(); ++b) {
    out.push_back(model_assisted_from_predictions(sample, f.col(b), y, "rf").t_hat);
  }
  return out;
}

MAEstimate forest_ma_estimate(const Matrix& x, const DrawnSample& sample, std::span<const double> y,
                              const RandomForest& forest) {
  const Matrix f = forest.tree_predictions(x);
  const Vector averaged = f.rowwise().mean();
  MAEstimate est = model_assisted_from_predictions(sample, averaged, y, "rf");
  double bagged = 0.0;
  for (Index b = 0; b < f.cols(); ++b) bagged += model_assisted_from_predictions(sample, f.col(b), y, "rf").t_hat;
  est.diagnostics["bagged_mean"] = bagged / static_cast<double>(f.cols());
  return est;
}

MAEstimate forest_ma_estimate(const FinitePopulation& pop, const DrawnSample& sample, const RandomForest& forest) {
  const Vector ys = gather(pop.y(), sample.indices);
  return forest_ma_estimate(pop.x(), sample, std::span<const double>(ys.data(), static_cast<std::size_t>(ys.size())),
                            forest);
}

}  // namespace svy
