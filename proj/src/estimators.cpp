#include "svy/estimators.hpp"

#include <cmath>

#include "svy/error.hpp"
#include "svy/kernels.hpp"
#include "svy/linalg.hpp"

namespace svy {

Vector PredictorModel::predict_rows(const Matrix& x) const {
  Vector out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    out[i] = predict(row);
  }
  return out;
}

double LinearModel::predict(std::span<const double> x) const {
  const auto p = static_cast<std::size_t>(coefficients_.size());
  return intercept_ + kernels::dot(x.first(p), std::span<const double>(coefficients_.data(), p));
}

Vector LinearModel::predict_rows(const Matrix& x) const {
  return (x * coefficients_).array() + intercept_;
}

MAEstimate horvitz_thompson(const DrawnSample& sample, std::span<const double> y) {
  if (static_cast<Index>(y.size()) != sample.size()) {
    throw InputError("estimators", "y length differs from the sample size");
  }
  MAEstimate est;
  est.method = "ht";
  est.n_used = sample.size();
  est.t_hat = kernels::dot(y, std::span<const double>(sample.weights.data(), y.size()));
  return est;
}

MAEstimate model_assisted_from_predictions(const DrawnSample& sample, const Vector& population_predictions,
                                           std::span<const double> y, const std::string& method) {
  if (static_cast<Index>(y.size()) != sample.size()) {
    throw InputError("estimators", "y length differs from the sample size");
  }
  for (Index i = 0; i < population_predictions.size(); ++i) {
    if (!std::isfinite(population_predictions[i])) {
      throw PredictorError(method + " prediction is not finite at unit " + std::to_string(i + 1),
                           static_cast<long>(i));
    }
  }
  std::vector<double> residual(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) residual[k] = y[k] - population_predictions[sample.indices[k]];
  const double projection = kernels::sum(
      std::span<const double>(population_predictions.data(), static_cast<std::size_t>(population_predictions.size())));
  const double correction =
      kernels::dot(residual, std::span<const double>(sample.weights.data(), residual.size()));
  MAEstimate est;
  est.method = method;
  est.n_used = sample.size();
  est.t_hat = projection + correction;
  est.diagnostics["projection"] = projection;
  est.diagnostics["correction"] = correction;
  if (!std::isfinite(est.t_hat)) throw NumericError("estimators", method + " estimate is not finite");
  return est;
}

MAEstimate model_assisted(const DrawnSample& sample, const Matrix& x, std::span<const double> y,
                          const FittedPredictor& predictor) {
  return model_assisted_from_predictions(sample, predictor.predict(x), y, predictor.method());
}

MAEstimate model_assisted(const DrawnSample& sample, const FinitePopulation& pop,
                          const FittedPredictor& predictor) {
  const Vector ys = gather(pop.y(), sample.indices);
  return model_assisted(sample, pop.x(), std::span<const double>(ys.data(), static_cast<std::size_t>(ys.size())),
                        predictor);
}

FittedPredictor fit_greg(const DrawnSample& sample, const Matrix& xs, const Vector& ys, bool intercept) {
  if (xs.rows() != sample.size() || ys.size() != sample.size()) {
    throw InputError("estimators", "sample rows of x and y must match the sample size");
  }
  const Matrix design = intercept ? prepend_intercept(xs) : xs;
  const Matrix gram = weighted_gram(design, sample.weights);
  const Vector rhs = design.transpose() * sample.weights.cwiseProduct(ys);
  const GuardedSpdSolver solver(gram);
  const Vector beta = solver.solve(rhs);

  Diagnostics diag;
  diag["condition"] = solver.condition();
  if (intercept) {
    return FittedPredictor("greg", std::make_shared<LinearModel>(beta[0], beta.tail(xs.cols())), diag);
  }
  return FittedPredictor("greg", std::make_shared<LinearModel>(0.0, beta), diag);
}

Vector greg_weights(const DrawnSample& sample, const Matrix& xs, const Vector& tx) {
  if (xs.rows() != sample.size() || tx.size() != xs.cols()) {
    throw InputError("estimators", "calibration inputs have inconsistent shapes");
  }
  const Vector ht_totals = xs.transpose() * sample.weights;
  const GuardedSpdSolver solver(weighted_gram(xs, sample.weights));
  const Vector g = solver.solve(tx - ht_totals);
  return sample.weights.cwiseProduct((1.0 + (xs * g).array()).matrix());
}

}  // namespace svy
