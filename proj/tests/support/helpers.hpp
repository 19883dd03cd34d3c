#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include <Eigen/QR>

#include "svy/linalg.hpp"
#include "svy/rng.hpp"
#include "svy/sampling.hpp"

namespace svy::test {

// A random population with an SRSWOR or unequal-pi sample drawn from it.
struct Instance {
  Matrix x;  // N x p
  Vector y;  // N
  DrawnSample sample;
  Matrix xs;
  Vector ys;
};

inline Instance random_instance(Index N, Index p, Index n, std::uint64_t seed, double noise = 1.0,
                                bool unequal_pi = false) {
  Stream rng(seed, {0x7465});
  Instance inst;
  inst.x.resize(N, p);
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < p; ++j) inst.x(i, j) = rng.normal(1.0 + 0.5 * static_cast<double>(j), 1.0);
  }
  Vector beta(p);
  for (Index j = 0; j < p; ++j) beta[j] = rng.normal(0.0, 2.0);
  inst.y.resize(N);
  for (Index i = 0; i < N; ++i) inst.y[i] = 3.0 + inst.x.row(i).dot(beta) + rng.normal(0.0, noise);

  std::vector<Index> idx(static_cast<std::size_t>(N));
  for (Index i = 0; i < N; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Index k = 0; k < n; ++k) {
    const auto j = static_cast<Index>(k + static_cast<Index>(rng.index(static_cast<std::size_t>(N - k))));
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  Vector pi(n);
  for (Index k = 0; k < n; ++k) {
    pi[k] = unequal_pi ? 0.05 + 0.9 * rng.uniform() : static_cast<double>(n) / static_cast<double>(N);
  }
  inst.sample = make_sample(idx, pi);
  inst.xs = gather_rows(inst.x, inst.sample.indices);
  inst.ys = gather(inst.y, inst.sample.indices);
  return inst;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::span<const double> view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace svy::test

namespace svy::test {

// Sample rows whose pi-scaled columns Pi^{-1/2} X_S are orthogonal, with a
// response; the weighted least-squares problem then decouples per column.
struct OrthogonalInstance {
  DrawnSample sample;
  Matrix xs;
  Vector ys;
};

inline OrthogonalInstance orthogonal_instance(Index n, Index p, std::uint64_t seed) {
  Stream rng(seed, {0x6f72});
  Matrix g(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) g(i, j) = rng.normal(0.0, 1.0);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(n, p);
  Vector pi(n);
  for (Index i = 0; i < n; ++i) pi[i] = 0.1 + 0.8 * rng.uniform();
  OrthogonalInstance out;
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  out.sample = make_sample(idx, pi);
  out.xs.resize(n, p);
  for (Index j = 0; j < p; ++j) {
    const double scale = 0.5 + 4.0 * rng.uniform();
    for (Index i = 0; i < n; ++i) out.xs(i, j) = std::sqrt(pi[i]) * q(i, j) * scale;
  }
  out.ys.resize(n);
  for (Index i = 0; i < n; ++i) {
    double v = rng.normal(0.0, 1.0);
    for (Index j = 0; j < p; ++j) v += (j % 2 == 0 ? 1.5 : -0.7) * out.xs(i, j) / std::sqrt(pi[i]);
    out.ys[i] = std::sqrt(pi[i]) * v;
  }
  return out;
}

// Closed-form elastic-net coefficients for an orthogonal instance without
// intercept or standardization: S_{l a}(sum x y / pi) / (sum x^2 / pi + l (1 - a)).
inline Vector orthogonal_closed_form(const OrthogonalInstance& inst, double lambda, double alpha) {
  const Index p = inst.xs.cols();
  Vector beta(p);
  for (Index j = 0; j < p; ++j) {
    double xy = 0.0, xx = 0.0;
    for (Index i = 0; i < inst.xs.rows(); ++i) {
      xy += inst.xs(i, j) * inst.ys[i] / inst.sample.pi[i];
      xx += inst.xs(i, j) * inst.xs(i, j) / inst.sample.pi[i];
    }
    const double t = lambda * alpha;
    const double s = xy > t ? xy - t : (xy < -t ? xy + t : 0.0);
    beta[j] = s / (xx + lambda * (1.0 - alpha));
  }
  return beta;
}

}  // namespace svy::test
