#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>

#include "svy/population.hpp"
#include "svy/sampling.hpp"
#include "svy/types.hpp"

namespace svy {

using Diagnostics = std::map<std::string, double>;

// A fitted regression surface x -> f(x). Implementations are immutable.
class PredictorModel {
 public:
  virtual ~PredictorModel() = default;
  virtual double predict(std::span<const double> x) const = 0;
  // Predictions for every row of x.
  virtual Vector predict_rows(const Matrix& x) const;
};

class LinearModel final : public PredictorModel {
 public:
  LinearModel(double intercept, Vector coefficients)
      : intercept_(intercept), coefficients_(std::move(coefficients)) {}

  double predict(std::span<const double> x) const override;
  Vector predict_rows(const Matrix& x) const override;

  double intercept() const noexcept { return intercept_; }
  const Vector& coefficients() const noexcept { return coefficients_; }

 private:
  double intercept_;
  Vector coefficients_;
};

class FittedPredictor {
 public:
  FittedPredictor(std::string method, std::shared_ptr<const PredictorModel> model,
                  Diagnostics diagnostics = {})
      : method_(std::move(method)), model_(std::move(model)), diagnostics_(std::move(diagnostics)) {}

  const std::string& method() const noexcept { return method_; }
  const Diagnostics& diagnostics() const noexcept { return diagnostics_; }
  const PredictorModel& model() const noexcept { return *model_; }

  double predict(std::span<const double> x) const { return model_->predict(x); }
  Vector predict(const Matrix& x) const { return model_->predict_rows(x); }

  // Typed access to the fitted payload, nullptr on a kind mismatch.
  template <class Model>
  const Model* model_as() const noexcept {
    return dynamic_cast<const Model*>(model_.get());
  }

 private:
  std::string method_;
  std::shared_ptr<const PredictorModel> model_;
  Diagnostics diagnostics_;
};

struct MAEstimate {
  double t_hat = 0.0;
  std::string method;
  Index n_used = 0;
  Diagnostics diagnostics;
};

// sum_S y_i / pi_i; y aligned with sample.indices.
MAEstimate horvitz_thompson(const DrawnSample& sample, std::span<const double> y);

// sum_U f(x_i) + sum_S (y_i - f(x_i)) / pi_i, with x the population matrix
// the predictor was fitted on (all N rows) and y aligned with the sample.
MAEstimate model_assisted(const DrawnSample& sample, const Matrix& x, std::span<const double> y,
                          const FittedPredictor& predictor);
MAEstimate model_assisted(const DrawnSample& sample, const FinitePopulation& pop,
                          const FittedPredictor& predictor);
// Same estimator from precomputed predictions f(x_i), i in U.
MAEstimate model_assisted_from_predictions(const DrawnSample& sample, const Vector& population_predictions,
                                           std::span<const double> y, const std::string& method);

// Design-weighted least squares. xs/ys are the sample rows aligned with
// sample.indices. With intercept an implicit leading column of ones is fitted.
FittedPredictor fit_greg(const DrawnSample& sample, const Matrix& xs, const Vector& ys,
                         bool intercept = true);

// Calibration weights w_iS = (1/pi_i){1 + (t_x - sum_S x/pi)^T (sum_S x x^T/pi)^-1 x_i}
// for the columns of xs exactly as given (prepend a ones column for an intercept).
Vector greg_weights(const DrawnSample& sample, const Matrix& xs, const Vector& tx);

}  // namespace svy
