#include "svy/linalg.hpp"

#include <cmath>
#include <limits>

#include "svy/error.hpp"

namespace svy {

GuardedSpdSolver::GuardedSpdSolver(const Matrix& a, double max_condition) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InputError("estimators", "Gram matrix must be square and non-empty");
  }
  if (!a.allFinite()) throw NumericError("estimators", "Gram matrix has non-finite entries");
  const Vector diag = a.diagonal();
  if ((diag.array() <= 0.0).any()) {
    throw SingularityError("weighted Gram matrix has a zero column; use ridge instead",
                           std::numeric_limits<double>::infinity());
  }
  const Vector inv_sqrt = diag.array().rsqrt();
  const Matrix scaled = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(scaled, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ <= max_condition)) {
    throw SingularityError("weighted Gram matrix is rank deficient (condition " +
                               std::to_string(condition_) + "); use ridge instead",
                           condition_);
  }
  ldlt_.compute(a);
  if (ldlt_.info() != Eigen::Success) {
    throw NumericError("estimators", "factorization of the weighted Gram matrix failed");
  }
}

Vector GuardedSpdSolver::solve(const Vector& b) const {
  Vector x = ldlt_.solve(b);
  if (!x.allFinite()) throw NumericError("estimators", "linear solve produced non-finite values");
  return x;
}

Matrix weighted_gram(const Matrix& x, const Vector& w) {
  const Matrix xw = w.cwiseSqrt().asDiagonal() * x;
  Matrix g = Matrix::Zero(x.cols(), x.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

Matrix gather_rows(const Matrix& x, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
  return out;
}

Vector gather(const Vector& v, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out[static_cast<Index>(k)] = v[rows[k]];
  return out;
}

Matrix gather_columns(const Matrix& x, std::span<const Index> columns) {
  Matrix out(x.rows(), static_cast<Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) out.col(static_cast<Index>(k)) = x.col(columns[k]);
  return out;
}

Matrix prepend_intercept(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

}  // namespace svy
