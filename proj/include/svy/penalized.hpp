#pragma once

#include <vector>

#include "svy/estimators.hpp"
#include "svy/rng.hpp"
#include "svy/sampling.hpp"
#include "svy/standardize.hpp"
#include "svy/types.hpp"

namespace svy {

// lambda_1 = lambda * alpha (L1), lambda_2 = lambda * (1 - alpha) (L2).
struct PenaltySpec {
  double lambda = 0.0;
  double alpha = 1.0;
  bool penalize_intercept = false;
};

struct FitOptions {
  bool intercept = true;
  bool standardize = true;
  // Divide y by its design-weighted standard deviation before fitting, so
  // lambda is free of the units of y. Coefficients are returned in y units.
  bool scale_response = false;
};

struct CdOptions {
  double tol = 1e-7;  // max absolute coefficient change per sweep
  int max_iter = 10000;
};

// Weighted least-squares problem on transformed columns z (centered when an
// unpenalized intercept is fitted, scaled when standardizing):
//   gram = sum_S z z^T / pi,  cross = sum_S z (y - y_center) / pi,
//   yty  = sum_S (y - y_center)^2 / pi,
// with y - y_center further divided by y_scale when scaling the response.
struct PenalizedProblem {
  Standardization transform;
  Matrix gram;
  Vector cross;
  double yty = 0.0;
  double y_center = 0.0;
  double y_scale = 1.0;
  bool intercept_column = false;  // penalized intercept carried as column 0

  static PenalizedProblem build(const Vector& weights, const Matrix& xs, const Vector& ys,
                                const FitOptions& options, bool penalize_intercept = false);

  Index columns() const noexcept { return gram.cols(); }
  bool retained(Index j) const { return transform.retained[static_cast<std::size_t>(j)] != 0; }

  // 0.5 * (yty - 2 cross.beta + beta^T gram beta) + lambda*alpha*|beta|_1
  //   + 0.5 * lambda*(1-alpha)*|beta|_2^2
  double objective(const Vector& beta, double lambda, double alpha) const;

  LinearModel to_linear_model(const Vector& beta) const;
  // Design matrix in the problem's coordinates (adds the ones column when
  // the intercept is penalized).
  Matrix design(const Matrix& xs) const;
};

struct CdResult {
  Vector beta;
  int sweeps = 0;
  std::vector<double> objective_trace;
  double max_objective_increase = 0.0;
};

double soft_threshold(double z, double lambda);

// Cyclic coordinate descent, ascending column order:
//   beta_j <- S_{lambda*alpha}(sum_S r_ij z_ij / pi_i) / (sum_S z_ij^2 / pi_i + lambda(1-alpha)).
CdResult coordinate_descent(const PenalizedProblem& problem, double lambda, double alpha,
                            const CdOptions& options, const Vector* warm_start = nullptr);

// Smallest lambda that zeroes every slope: max_j |cross_j| / alpha
// (alpha floored at 1e-3 so the ridge end still gets a finite grid).
double lambda_max(const PenalizedProblem& problem, double alpha);
std::vector<double> lambda_grid(double lambda_max, int count = 100, double min_ratio = 1e-4);

FittedPredictor fit_ridge(const DrawnSample& sample, const Matrix& xs, const Vector& ys, double lambda,
                          const FitOptions& options = {});

// Penalized calibration weights on the raw columns of xs:
// w_iS = (1/pi_i){1 + (t_x - sum_S x/pi)^T (sum_S x x^T/pi + lambda I)^-1 x_i}.
Vector ridge_weights(const DrawnSample& sample, const Matrix& xs, const Vector& tx, double lambda);

FittedPredictor fit_elastic_net(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                                const PenaltySpec& spec, const CdOptions& cd = {},
                                const FitOptions& options = {});

struct CvOptions {
  std::vector<double> lambdas;  // empty: lambda_grid(lambda_max(alpha), n_lambda, lambda_min_ratio)
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  int folds = 10;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  bool weighted_loss = true;  // held-out loss sum (y - f)^2 / pi, else unweighted
  CdOptions cd;
  FitOptions fit{true, true, true};
};

struct CvResult {
  PenaltySpec best;
  double best_error = 0.0;
  // errors[a][l]: held-out loss for alphas[a] and lambda_grids[a][l].
  std::vector<std::vector<double>> errors;
  std::vector<std::vector<double>> lambda_grids;
  std::vector<int> fold_of;  // fold index per sample position
};

CvResult cross_validate(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                        const CvOptions& options, Stream& rng);

// Cross-validates (lambda, alpha) then refits on the whole sample.
FittedPredictor fit_penalized_cv(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                                 const CvOptions& options, Stream& rng, const std::string& method);

}  // namespace svy
