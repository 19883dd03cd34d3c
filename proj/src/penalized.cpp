#include "svy/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "svy/error.hpp"
#include "svy/kernels.hpp"
#include "svy/linalg.hpp"

namespace svy {

namespace {

constexpr const char* kModule = "penalized";
constexpr int kSupportSolveEvery = 3;
constexpr int kSupportRounds = 8;

void check_inputs(const DrawnSample& sample, const Matrix& xs, const Vector& ys) {
  if (xs.rows() != sample.size() || ys.size() != sample.size()) {
    throw InputError(kModule, "sample rows of x and y must match the sample size");
  }
}

void check_spec(const PenaltySpec& spec) {
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) {
    throw ParameterError(kModule, "lambda must be a finite nonnegative real");
  }
  if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) throw ParameterError(kModule, "alpha must lie in [0, 1]");
}

std::vector<Index> retained_indices(const PenalizedProblem& problem) {
  std::vector<Index> idx;
  for (Index j = 0; j < problem.columns(); ++j) {
    if (problem.retained(j)) idx.push_back(j);
  }
  return idx;
}

Matrix sub_gram(const PenalizedProblem& problem, const std::vector<Index>& idx) {
  const auto k = static_cast<Index>(idx.size());
  Matrix g(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      g(a, b) = problem.gram(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
  }
  return g;
}

Vector scatter(const Vector& sub, const std::vector<Index>& idx, Index p) {
  Vector full = Vector::Zero(p);
  for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = sub[static_cast<Index>(k)];
  return full;
}

// Closed-form ridge on the problem's coordinates.
Vector ridge_solution(const PenalizedProblem& problem, double lambda) {
  const auto idx = retained_indices(problem);
  if (idx.empty()) return Vector::Zero(problem.columns());
  Matrix g = sub_gram(problem, idx);
  Vector c(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) c[static_cast<Index>(k)] = problem.cross[idx[k]];
  Vector beta;
  if (lambda == 0.0) {
    beta = GuardedSpdSolver(g).solve(c);
  } else {
    g.diagonal().array() += lambda;
    Eigen::LDLT<Matrix> ldlt(g);
    beta = ldlt.solve(c);
    if (ldlt.info() != Eigen::Success || !beta.allFinite()) {
      throw NumericError(kModule, "ridge solve produced non-finite coefficients");
    }
  }
  return scatter(beta, idx, problem.columns());
}

// Ridge path from one eigendecomposition: beta(lambda) = V (V^T c / (e + lambda)).
class RidgePath {
 public:
  explicit RidgePath(const PenalizedProblem& problem) : idx_(retained_indices(problem)), p_(problem.columns()) {
    if (idx_.empty()) return;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub_gram(problem, idx_));
    vectors_ = eig.eigenvectors();
    values_ = eig.eigenvalues();
    Vector c(static_cast<Index>(idx_.size()));
    for (std::size_t k = 0; k < idx_.size(); ++k) c[static_cast<Index>(k)] = problem.cross[idx_[k]];
    rotated_ = vectors_.transpose() * c;
  }

  Vector at(double lambda) const {
    if (idx_.empty()) return Vector::Zero(p_);
    const Vector denom = values_.array() + lambda;
    if ((denom.array() <= 1e-12 * std::max(1.0, values_.maxCoeff())).any()) {
      throw NumericError(kModule, "ridge path is singular at this lambda");
    }
    return scatter(vectors_ * rotated_.cwiseQuotient(denom), idx_, p_);
  }

 private:
  std::vector<Index> idx_;
  Index p_;
  Matrix vectors_;
  Vector values_;
  Vector rotated_;
};

}  // namespace

PenalizedProblem PenalizedProblem::build(const Vector& weights, const Matrix& xs, const Vector& ys,
                                         const FitOptions& options, bool penalize_intercept) {
  PenalizedProblem problem;
  problem.intercept_column = options.intercept && penalize_intercept;
  const double total_weight = weights.sum();
  Matrix z;
  if (problem.intercept_column) {
    const Matrix x1 = prepend_intercept(xs);
    problem.transform = Standardization::fit(x1, weights, false, options.standardize);
    z = problem.transform.apply(x1);
  } else {
    problem.transform = Standardization::fit(xs, weights, options.intercept, options.standardize);
    z = problem.transform.apply(xs);
    if (options.intercept) problem.y_center = weights.dot(ys) / total_weight;
  }
  Vector yc = ys.array() - problem.y_center;
  if (options.scale_response) {
    const double mean = weights.dot(ys) / total_weight;
    const double var = weights.dot((ys.array() - mean).square().matrix()) / total_weight;
    if (var > 0.0 && std::isfinite(var)) problem.y_scale = std::sqrt(var);
    yc /= problem.y_scale;
  }
  const Vector wy = weights.cwiseProduct(yc);
  problem.gram = weighted_gram(z, weights);
  problem.cross = z.transpose() * wy;
  problem.yty = wy.dot(yc);
  return problem;
}

Matrix PenalizedProblem::design(const Matrix& xs) const {
  return intercept_column ? prepend_intercept(xs) : xs;
}

double PenalizedProblem::objective(const Vector& beta, double lambda, double alpha) const {
  const double quad = beta.dot(gram * beta);
  return 0.5 * (yty - 2.0 * cross.dot(beta) + quad) + lambda * alpha * beta.lpNorm<1>() +
         0.5 * lambda * (1.0 - alpha) * beta.squaredNorm();
}

LinearModel PenalizedProblem::to_linear_model(const Vector& beta) const {
  const Vector raw = y_scale * transform.slopes_to_raw(beta);
  if (intercept_column) return LinearModel(raw[0], raw.tail(raw.size() - 1));
  return LinearModel(transform.intercept_to_raw(y_center, raw), raw);
}

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

CdResult coordinate_descent(const PenalizedProblem& problem, double lambda, double alpha,
                            const CdOptions& options, const Vector* warm_start) {
  if (!(options.tol > 0.0)) throw ParameterError(kModule, "tol must be positive");
  if (options.max_iter < 1) throw ParameterError(kModule, "max_iter must be >= 1");
  const Index p = problem.columns();
  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);

  CdResult result;
  result.beta = warm_start != nullptr ? *warm_start : Vector::Zero(p);
  for (Index j = 0; j < p; ++j) {
    if (!problem.retained(j)) result.beta[j] = 0.0;
  }
  // q = gram * beta, kept current with one axpy per coefficient change.
  Vector q = problem.gram * result.beta;
  const std::span<double> q_span(q.data(), static_cast<std::size_t>(p));

  auto objective = [&]() {
    const double quad = kernels::dot(std::span<const double>(result.beta.data(), static_cast<std::size_t>(p)),
                                     std::span<const double>(q.data(), static_cast<std::size_t>(p)));
    return 0.5 * (problem.yty - 2.0 * problem.cross.dot(result.beta) + quad) + l1 * result.beta.lpNorm<1>() +
           0.5 * l2 * result.beta.squaredNorm();
  };

  double previous = objective();
  result.objective_trace.push_back(previous);

  // One cyclic pass over the given coordinates; returns the largest change.
  auto pass = [&](const std::vector<Index>& coords) {
    double max_change = 0.0;
    for (Index j : coords) {
      const double gjj = problem.gram(j, j);
      const double denom = gjj + l2;
      if (denom <= 0.0) continue;
      const double old = result.beta[j];
      // sum_S r_ij z_ij / pi_i with r the partial residual excluding j
      const double partial = problem.cross[j] - q[j] + gjj * old;
      const double updated = soft_threshold(partial, l1) / denom;
      const double change = updated - old;
      if (change != 0.0) {
        kernels::axpy(change, std::span<const double>(problem.gram.col(j).data(), static_cast<std::size_t>(p)),
                      q_span);
        result.beta[j] = updated;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    return max_change;
  };

  std::vector<Index> all;
  for (Index j = 0; j < p; ++j) {
    if (problem.retained(j)) all.push_back(j);
  }
  std::vector<Index> active;
  bool full = true;
  int since_solve = 0;
  int solve_every = kSupportSolveEvery;

  // With the support and signs fixed, the minimiser on the support solves
  // (G_AA + l2 I) b = c_A - l1 sign_A. Step from beta toward b, stopping where
  // a coefficient first reaches zero (the objective is a convex quadratic on
  // that segment, so it falls), drop it and repeat. A full pass afterwards
  // checks optimality.
  auto support_solve = [&]() {
    bool moved = false;
    for (int round = 0; round < kSupportRounds && !active.empty(); ++round) {
      const auto k = static_cast<Index>(active.size());
      Matrix g(k, k);
      Vector rhs(k);
      for (Index a = 0; a < k; ++a) {
        const Index ja = active[static_cast<std::size_t>(a)];
        for (Index c = 0; c < k; ++c) g(a, c) = problem.gram(ja, active[static_cast<std::size_t>(c)]);
        g(a, a) += l2;
        rhs[a] = problem.cross[ja] - l1 * (result.beta[ja] > 0.0 ? 1.0 : -1.0);
      }
      const Eigen::LDLT<Matrix> ldlt(g);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
      const Vector target = ldlt.solve(rhs);
      if (!target.allFinite()) break;
      double step = 1.0;
      Index blocking = -1;
      for (Index a = 0; a < k; ++a) {
        const double now = result.beta[active[static_cast<std::size_t>(a)]];
        if (target[a] * now <= 0.0) {
          const double t = now / (now - target[a]);
          if (t < step) {
            step = t;
            blocking = a;
          }
        }
      }
      for (Index a = 0; a < k; ++a) {
        double& bj = result.beta[active[static_cast<std::size_t>(a)]];
        bj += step * (target[a] - bj);
      }
      moved = true;
      if (blocking < 0) break;
      result.beta[active[static_cast<std::size_t>(blocking)]] = 0.0;
      active.erase(active.begin() + blocking);
    }
    if (moved) q = problem.gram * result.beta;
    return moved;
  };

  for (int sweep = 1; sweep <= options.max_iter; ++sweep) {
    // Full passes alternate with passes over the nonzero coefficients; the
    // fit is accepted only after a full pass moves nothing beyond tol.
    const double max_change = pass(full ? all : active);
    const double current = objective();
    result.objective_trace.push_back(current);
    result.max_objective_increase = std::max(result.max_objective_increase, current - previous);
    previous = current;
    result.sweeps = sweep;
    if (!std::isfinite(current)) throw NumericError(kModule, "coordinate descent diverged");
    if (max_change < options.tol) {
      if (full) return result;
      full = true;
    } else if (full) {
      active.clear();
      for (Index j : all) {
        if (result.beta[j] != 0.0) active.push_back(j);
      }
      full = false;
      since_solve = 0;
    } else if (++since_solve >= solve_every) {
      since_solve = 0;
      if (support_solve()) {
        const double solved = objective();
        result.objective_trace.push_back(solved);
        result.max_objective_increase = std::max(result.max_objective_increase, solved - previous);
        previous = solved;
        full = true;
      } else {
        solve_every *= 2;
      }
    }
  }
  std::vector<double> last(result.beta.data(), result.beta.data() + p);
  throw ConvergenceError("coordinate descent did not converge in " + std::to_string(options.max_iter) +
                             " sweeps (lambda " + std::to_string(lambda) + ", alpha " +
                             std::to_string(alpha) + ")",
                         std::move(last), std::move(result.objective_trace));
}

double lambda_max(const PenalizedProblem& problem, double alpha) {
  double m = 0.0;
  for (Index j = 0; j < problem.columns(); ++j) {
    if (problem.retained(j) && !(problem.intercept_column && j == 0)) m = std::max(m, std::abs(problem.cross[j]));
  }
  return m / std::max(alpha, 1e-3);
}

std::vector<double> lambda_grid(double lambda_max, int count, double min_ratio) {
  if (count < 1) throw ParameterError(kModule, "lambda grid needs at least one value");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw ParameterError(kModule, "lambda_min_ratio must lie in (0, 1]");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double log_hi = std::log(lambda_max > 0.0 ? lambda_max : 1.0);
  const double step = std::log(min_ratio) / static_cast<double>(count - 1);
  for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = std::exp(log_hi + step * k);
  grid.front() = lambda_max > 0.0 ? lambda_max : 1.0;
  return grid;
}

FittedPredictor fit_ridge(const DrawnSample& sample, const Matrix& xs, const Vector& ys, double lambda,
                          const FitOptions& options) {
  check_inputs(sample, xs, ys);
  check_spec({lambda, 0.0, false});
  const auto problem = PenalizedProblem::build(sample.weights, xs, ys, options);
  const Vector beta = ridge_solution(problem, lambda);
  Diagnostics diag{{"lambda", lambda}, {"alpha", 0.0}, {"transformed_norm2", beta.norm()}};
  return FittedPredictor("ridge", std::make_shared<LinearModel>(problem.to_linear_model(beta)), diag);
}

Vector ridge_weights(const DrawnSample& sample, const Matrix& xs, const Vector& tx, double lambda) {
  if (xs.rows() != sample.size() || tx.size() != xs.cols()) {
    throw InputError(kModule, "calibration inputs have inconsistent shapes");
  }
  check_spec({lambda, 0.0, false});
  Matrix gram = weighted_gram(xs, sample.weights);
  const Vector gap = tx - xs.transpose() * sample.weights;
  Vector g;
  if (lambda == 0.0) {
    g = GuardedSpdSolver(gram).solve(gap);
  } else {
    gram.diagonal().array() += lambda;
    g = gram.ldlt().solve(gap);
    if (!g.allFinite()) throw NumericError(kModule, "ridge weight solve produced non-finite values");
  }
  return sample.weights.cwiseProduct((1.0 + (xs * g).array()).matrix());
}

FittedPredictor fit_elastic_net(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                                const PenaltySpec& spec, const CdOptions& cd, const FitOptions& options) {
  check_inputs(sample, xs, ys);
  check_spec(spec);
  const auto problem = PenalizedProblem::build(sample.weights, xs, ys, options, spec.penalize_intercept);
  const auto result = coordinate_descent(problem, spec.lambda, spec.alpha, cd);
  Diagnostics diag{{"lambda", spec.lambda},
                   {"alpha", spec.alpha},
                   {"iterations", static_cast<double>(result.sweeps)},
                   {"objective", result.objective_trace.back()},
                   {"max_objective_increase", result.max_objective_increase},
                   {"nonzero", static_cast<double>((result.beta.array() != 0.0).count())}};
  const std::string method = spec.alpha == 1.0 ? "lasso" : "elastic_net";
  return FittedPredictor(method, std::make_shared<LinearModel>(problem.to_linear_model(result.beta)), diag);
}

CvResult cross_validate(const DrawnSample& sample, const Matrix& xs, const Vector& ys, const CvOptions& options,
                        Stream& rng) {
  check_inputs(sample, xs, ys);
  const Index n = sample.size();
  if (options.folds < 2) throw ParameterError(kModule, "cross-validation needs at least 2 folds");
  if (options.folds > n) throw ParameterError(kModule, "more folds than sample units leaves empty folds");
  if (options.alphas.empty()) throw ParameterError(kModule, "alpha grid is empty");
  for (double a : options.alphas) check_spec({0.0, a, false});
  for (double l : options.lambdas) check_spec({l, 1.0, false});

  CvResult out;
  const std::size_t n_alpha = options.alphas.size();
  if (options.lambdas.empty()) {
    const auto full = PenalizedProblem::build(sample.weights, xs, ys, options.fit);
    for (double a : options.alphas) {
      out.lambda_grids.push_back(lambda_grid(lambda_max(full, a), options.n_lambda, options.lambda_min_ratio));
    }
  } else {
    std::vector<double> grid = options.lambdas;
    std::sort(grid.begin(), grid.end(), std::greater<>());
    out.lambda_grids.assign(n_alpha, grid);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng.engine());
  out.fold_of.assign(static_cast<std::size_t>(n), 0);
  for (Index k = 0; k < n; ++k) out.fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] =
      static_cast<int>(k % options.folds);

  out.errors.resize(n_alpha);
  for (std::size_t a = 0; a < n_alpha; ++a) out.errors[a].assign(out.lambda_grids[a].size(), 0.0);

  for (int fold = 0; fold < options.folds; ++fold) {
    std::vector<Index> train, held;
    for (Index k = 0; k < n; ++k) (out.fold_of[static_cast<std::size_t>(k)] == fold ? held : train).push_back(k);
    if (train.empty() || held.empty()) throw ParameterError(kModule, "degenerate cross-validation fold");
    const Vector w_train = gather(sample.weights, train);
    const auto problem =
        PenalizedProblem::build(w_train, gather_rows(xs, train), gather(ys, train), options.fit);
    const Matrix x_held = gather_rows(xs, held);
    const Vector y_held = gather(ys, held);
    const Vector w_held = options.weighted_loss ? gather(sample.weights, held) : Vector::Ones(y_held.size());

    std::optional<RidgePath> ridge;
    for (std::size_t a = 0; a < n_alpha; ++a) {
      const double alpha = options.alphas[a];
      const auto& grid = out.lambda_grids[a];
      Vector warm = Vector::Zero(problem.columns());
      for (std::size_t l = 0; l < grid.size(); ++l) {
        Vector beta;
        if (alpha == 0.0) {
          if (!ridge) ridge.emplace(problem);
          beta = ridge->at(grid[l]);
        } else {
          beta = coordinate_descent(problem, grid[l], alpha, options.cd, &warm).beta;
          warm = beta;
        }
        const Vector resid = y_held - problem.to_linear_model(beta).predict_rows(x_held);
        out.errors[a][l] += w_held.dot(resid.cwiseAbs2());
      }
    }
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n_alpha; ++a) {
    for (std::size_t l = 0; l < out.errors[a].size(); ++l) {
      if (out.errors[a][l] < best) {
        best = out.errors[a][l];
        out.best = PenaltySpec{out.lambda_grids[a][l], options.alphas[a], false};
      }
    }
  }
  out.best_error = best;
  return out;
}

FittedPredictor fit_penalized_cv(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                                 const CvOptions& options, Stream& rng, const std::string& method) {
  PenaltySpec spec;
  if (options.alphas.size() == 1 && options.lambdas.size() == 1) {
    spec = PenaltySpec{options.lambdas.front(), options.alphas.front(), false};
  } else {
    spec = cross_validate(sample, xs, ys, options, rng).best;
  }
  FittedPredictor fitted = spec.alpha == 0.0 ? fit_ridge(sample, xs, ys, spec.lambda, options.fit)
                                             : fit_elastic_net(sample, xs, ys, spec, options.cd, options.fit);
  Diagnostics diag = fitted.diagnostics();
  diag["lambda"] = spec.lambda;
  diag["alpha"] = spec.alpha;
  return FittedPredictor(method, std::shared_ptr<const PredictorModel>(std::make_shared<LinearModel>(
                                     *fitted.model_as<LinearModel>())),
                         diag);
}

}  // namespace svy
