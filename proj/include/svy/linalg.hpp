#pragma once

#include <span>

#include "svy/types.hpp"

namespace svy {

inline constexpr double kMaxCondition = 1e12;

// Solver for symmetric positive (semi)definite systems with a rank guard.
// The condition number is measured on the Jacobi-equilibrated matrix
// D^-1/2 A D^-1/2 so that column scale alone never trips it; the solve
// itself uses a pivoted LDL^T factorization.
class GuardedSpdSolver {
 public:
  explicit GuardedSpdSolver(const Matrix& a, double max_condition = kMaxCondition);

  Vector solve(const Vector& b) const;
  double condition() const noexcept { return condition_; }

 private:
  Eigen::LDLT<Matrix> ldlt_;
  double condition_ = 0.0;
};

// X^T diag(w) X
Matrix weighted_gram(const Matrix& x, const Vector& w);

// Rows of x at the given positions.
Matrix gather_rows(const Matrix& x, std::span<const Index> rows);
Vector gather(const Vector& v, std::span<const Index> rows);
Matrix gather_columns(const Matrix& x, std::span<const Index> columns);

// [1 | x]
Matrix prepend_intercept(const Matrix& x);

}  // namespace svy
