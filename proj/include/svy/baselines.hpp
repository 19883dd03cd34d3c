#pragma once

#include <span>
#include <vector>

#include "svy/estimators.hpp"
#include "svy/sampling.hpp"
#include "svy/standardize.hpp"
#include "svy/types.hpp"

namespace svy {

// Brute-force k-nearest-neighbour regression on design-weighted
// standardized columns; equal distances resolve to the lower sample position.
class KnnModel final : public PredictorModel {
 public:
  KnnModel(Standardization transform, Matrix sample_rows, Vector ys, Vector weights, Index k, bool pi_weighted);

  double predict(std::span<const double> x) const override;
  Vector predict_rows(const Matrix& x) const override;

  // Sample positions of the k nearest neighbours of x, nearest first.
  std::vector<Index> neighbours(std::span<const double> x) const;

 private:
  std::vector<Index> neighbours_standardized(const double* z) const;
  double average(const std::vector<Index>& idx) const;

  Standardization transform_;
  Matrix rows_;  // p x n: column i is the standardized sample row i
  Vector ys_;
  Vector weights_;
  Index k_;
  bool pi_weighted_;
};

FittedPredictor fit_knn(const DrawnSample& sample, const Matrix& xs, const Vector& ys, Index k,
                        bool pi_weighted = false);

enum class PcrRule { Fixed, P14, P24, P34 };

struct PcrSpec {
  PcrRule rule = PcrRule::Fixed;
  Index components = 1;  // used when rule == Fixed
};

// floor(p^(1/4)), floor(p^(2/4)), floor(p^(3/4)) in exact integer arithmetic.
Index pcr_components(const PcrSpec& spec, Index p);

struct PrincipalComponents {
  Standardization transform;
  Vector eigenvalues;  // descending
  Matrix directions;   // p x p, columns are eigenvectors in eigenvalue order
  Index rank = 0;
};

// Eigendecomposition of sum_S z z^T / pi on design-weighted standardized
// columns; each direction's largest-magnitude entry is made positive.
PrincipalComponents principal_components(const DrawnSample& sample, const Matrix& xs);

FittedPredictor fit_pcr(const DrawnSample& sample, const Matrix& xs, const Vector& ys, const PcrSpec& spec);

}  // namespace svy
