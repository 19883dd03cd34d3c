#include "svy/standardize.hpp"

#include <cmath>

namespace svy {

Standardization Standardization::fit(const Matrix& xs, const Vector& weights, bool center, bool scale) {
  const Index p = xs.cols();
  const double total_weight = weights.sum();
  Standardization s;
  s.center = Vector::Zero(p);
  s.scale = Vector::Ones(p);
  s.retained.assign(static_cast<std::size_t>(p), 1);
  for (Index j = 0; j < p; ++j) {
    const double mean = weights.dot(xs.col(j)) / total_weight;
    const double var = weights.dot((xs.col(j).array() - mean).square().matrix()) / total_weight;
    const double sd = std::sqrt(std::max(var, 0.0));
    if (center) s.center[j] = mean;
    if (sd <= 1e-12 * (1.0 + std::abs(mean))) {
      // Constant column: with centering it carries no information; without
      // centering it is only dropped when identically zero.
      const bool all_zero = xs.col(j).cwiseAbs().maxCoeff() == 0.0;
      if (center || all_zero) s.retained[static_cast<std::size_t>(j)] = 0;
      continue;
    }
    if (scale) s.scale[j] = sd;
  }
  return s;
}

Index Standardization::retained_count() const {
  Index k = 0;
  for (char r : retained) k += r != 0 ? 1 : 0;
  return k;
}

Matrix Standardization::apply(const Matrix& x) const {
  Matrix z(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    if (retained[static_cast<std::size_t>(j)] != 0) {
      z.col(j) = (x.col(j).array() - center[j]) / scale[j];
    } else {
      z.col(j).setZero();
    }
  }
  return z;
}

Vector Standardization::slopes_to_raw(const Vector& transformed) const {
  Vector raw = Vector::Zero(transformed.size());
  for (Index j = 0; j < transformed.size(); ++j) {
    if (retained[static_cast<std::size_t>(j)] != 0) raw[j] = transformed[j] / scale[j];
  }
  return raw;
}

double Standardization::intercept_to_raw(double base, const Vector& raw_slopes) const {
  return base - center.dot(raw_slopes);
}

}  // namespace svy
