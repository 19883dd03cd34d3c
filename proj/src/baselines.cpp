#include "svy/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "svy/error.hpp"
#include "svy/kernels.hpp"
#include "svy/linalg.hpp"

namespace svy {

namespace {

constexpr const char* kModule = "baselines";

Index integer_root4(Index value) {
  Index r = static_cast<Index>(std::floor(std::pow(static_cast<double>(value), 0.25)));
  while (r > 0 && r * r * r * r > value) --r;
  while ((r + 1) * (r + 1) * (r + 1) * (r + 1) <= value) ++r;
  return r;
}

}  // namespace

KnnModel::KnnModel(Standardization transform, Matrix sample_rows, Vector ys, Vector weights, Index k,
                   bool pi_weighted)
    : transform_(std::move(transform)),
      rows_(std::move(sample_rows)),
      ys_(std::move(ys)),
      weights_(std::move(weights)),
      k_(k),
      pi_weighted_(pi_weighted) {}

std::vector<Index> KnnModel::neighbours_standardized(const double* z) const {
  const Index n = rows_.cols();
  const auto p = static_cast<std::size_t>(rows_.rows());
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    dist[static_cast<std::size_t>(i)] = {kernels::active().squared_distance(z, rows_.col(i).data(), p), i};
  }
  std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
  std::vector<Index> out(static_cast<std::size_t>(k_));
  for (Index j = 0; j < k_; ++j) out[static_cast<std::size_t>(j)] = dist[static_cast<std::size_t>(j)].second;
  return out;
}

double KnnModel::average(const std::vector<Index>& idx) const {
  double num = 0.0;
  double den = 0.0;
  for (Index i : idx) {
    const double w = pi_weighted_ ? weights_[i] : 1.0;
    num += w * ys_[i];
    den += w;
  }
  return num / den;
}

std::vector<Index> KnnModel::neighbours(std::span<const double> x) const {
  Matrix row(1, static_cast<Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Index>(j)) = x[j];
  const Vector z = transform_.apply(row).row(0).transpose();
  return neighbours_standardized(z.data());
}

double KnnModel::predict(std::span<const double> x) const { return average(neighbours(x)); }

Vector KnnModel::predict_rows(const Matrix& x) const {
  const Matrix zt = transform_.apply(x).transpose();
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = average(neighbours_standardized(zt.col(i).data()));
  return out;
}

FittedPredictor fit_knn(const DrawnSample& sample, const Matrix& xs, const Vector& ys, Index k, bool pi_weighted) {
  if (xs.rows() != sample.size() || ys.size() != sample.size()) {
    throw InputError(kModule, "sample rows of x and y must match the sample size");
  }
  if (k < 1 || k > sample.size()) throw ParameterError(kModule, "k must lie in [1, n]");
  auto transform = Standardization::fit(xs, sample.weights, true, true);
  Matrix rows = transform.apply(xs).transpose();
  auto model = std::make_shared<KnnModel>(std::move(transform), std::move(rows), ys, sample.weights, k, pi_weighted);
  return FittedPredictor("knn", std::move(model), {{"k", static_cast<double>(k)}});
}

Index pcr_components(const PcrSpec& spec, Index p) {
  switch (spec.rule) {
    case PcrRule::Fixed:
      return spec.components;
    case PcrRule::P14:
      return integer_root4(p);
    case PcrRule::P24:
      return integer_root4(p * p);
    case PcrRule::P34:
      return integer_root4(p * p * p);
  }
  return spec.components;
}

PrincipalComponents principal_components(const DrawnSample& sample, const Matrix& xs) {
  PrincipalComponents pc;
  pc.transform = Standardization::fit(xs, sample.weights, true, true);
  const Matrix z = pc.transform.apply(xs);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(weighted_gram(z, sample.weights));
  if (eig.info() != Eigen::Success) throw NumericError(kModule, "eigendecomposition failed");
  const Index p = xs.cols();
  pc.eigenvalues = eig.eigenvalues().reverse();
  pc.directions = eig.eigenvectors().rowwise().reverse();
  for (Index c = 0; c < p; ++c) {
    Index arg = 0;
    pc.directions.col(c).cwiseAbs().maxCoeff(&arg);
    if (pc.directions(arg, c) < 0.0) pc.directions.col(c) *= -1.0;
  }
  const double top = std::max(pc.eigenvalues[0], 0.0);
  pc.rank = (pc.eigenvalues.array() > 1e-10 * top).count();
  if (top == 0.0) pc.rank = 0;
  return pc;
}

FittedPredictor fit_pcr(const DrawnSample& sample, const Matrix& xs, const Vector& ys, const PcrSpec& spec) {
  if (xs.rows() != sample.size() || ys.size() != sample.size()) {
    throw InputError(kModule, "sample rows of x and y must match the sample size");
  }
  const Index m = pcr_components(spec, xs.cols());
  const auto pc = principal_components(sample, xs);
  if (m < 1 || m > pc.rank) {
    throw ParameterError(kModule, "requested " + std::to_string(m) + " components but the numeric rank is " +
                                      std::to_string(pc.rank));
  }
  const Matrix v = pc.directions.leftCols(m);
  const Matrix scores = pc.transform.apply(xs) * v;
  const auto scores_fit = fit_greg(sample, scores, ys, true);
  const auto* lm = scores_fit.model_as<LinearModel>();
  const Vector raw = pc.transform.slopes_to_raw(v * lm->coefficients());
  Diagnostics diag{{"components", static_cast<double>(m)}, {"rank", static_cast<double>(pc.rank)}};
  return FittedPredictor("pcr", std::make_shared<LinearModel>(pc.transform.intercept_to_raw(lm->intercept(), raw), raw),
                         diag);
}

}  // namespace svy
