#pragma once

#include <vector>

#include "svy/types.hpp"

namespace svy {

// Design-weighted column standardization: center_j and scale_j are the
// 1/pi-weighted mean and standard deviation of column j over the sample.
// Zero-variance columns are flagged (retained[j] == false) and map to 0.
struct Standardization {
  Vector center;
  Vector scale;
  std::vector<char> retained;

  static Standardization fit(const Matrix& xs, const Vector& weights, bool center, bool scale);

  Index columns() const noexcept { return center.size(); }
  Index retained_count() const;
  Matrix apply(const Matrix& x) const;
  // Raw-scale slopes from slopes on the transformed columns.
  Vector slopes_to_raw(const Vector& transformed) const;
  // Raw-scale intercept for a fit whose transformed intercept is base.
  double intercept_to_raw(double base, const Vector& raw_slopes) const;
};

}  // namespace svy
