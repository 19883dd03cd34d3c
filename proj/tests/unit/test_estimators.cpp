#include "doctest.h"
#include "helpers.hpp"
#include "svy/error.hpp"
#include "svy/estimators.hpp"

using namespace svy;
using test::rel_err;
using test::view;

namespace {

class ConstantModel final : public PredictorModel {
 public:
  explicit ConstantModel(double c) : c_(c) {}
  double predict(std::span<const double>) const override { return c_; }

 private:
  double c_;
};

class LookupModel final : public PredictorModel {
 public:
  explicit LookupModel(const Matrix& x, const Vector& y) : x_(x), y_(y) {}
  double predict(std::span<const double> row) const override {
    for (Index i = 0; i < x_.rows(); ++i) {
      bool same = true;
      for (Index j = 0; j < x_.cols(); ++j) same = same && x_(i, j) == row[static_cast<std::size_t>(j)];
      if (same) return y_[i];
    }
    return std::nan("");
  }

 private:
  Matrix x_;
  Vector y_;
};

FittedPredictor wrap(std::shared_ptr<const PredictorModel> m) { return FittedPredictor("test", std::move(m)); }

}  // namespace

TEST_CASE("Horvitz-Thompson arithmetic") {
  const auto census = make_sample({0, 1, 2}, Vector::Ones(3));
  const std::vector<double> y{1, 2, 3};
  CHECK(horvitz_thompson(census, y).t_hat == 6.0);
  const auto half = make_sample({0, 2}, Vector::Constant(2, 0.5));
  const std::vector<double> y2{2, 4};
  CHECK(horvitz_thompson(half, y2).t_hat == 12.0);
  CHECK_THROWS_AS(horvitz_thompson(half, y), InputError);
}

TEST_CASE("Horvitz-Thompson is design-unbiased under exhaustive SRSWOR") {
  const Vector y = (Vector(4) << 1, 2, 3, 4).finished();
  const auto design = enumerate_srswor(4, 2);
  const double mean = srswor_expectation(design, [&](const DrawnSample& s) {
    const Vector ys = gather(y, s.indices);
    return horvitz_thompson(s, view(ys)).t_hat;
  });
  CHECK(mean == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("model-assisted estimator special cases") {
  auto inst = test::random_instance(50, 2, 10, 1);
  const double t_y = inst.y.sum();
  const auto perfect = wrap(std::make_shared<LookupModel>(inst.x, inst.y));
  CHECK(rel_err(model_assisted(inst.sample, inst.x, view(inst.ys), perfect).t_hat, t_y) < 1e-12);

  const auto zero = wrap(std::make_shared<ConstantModel>(0.0));
  CHECK(model_assisted(inst.sample, inst.x, view(inst.ys), zero).t_hat ==
        doctest::Approx(horvitz_thompson(inst.sample, view(inst.ys)).t_hat).epsilon(1e-14));

  const double c = 7.25;
  const auto constant = wrap(std::make_shared<ConstantModel>(c));
  double direct = 50.0 * c;
  for (Index k = 0; k < inst.sample.size(); ++k) direct += (inst.ys[k] - c) / inst.sample.pi[k];
  CHECK(rel_err(model_assisted(inst.sample, inst.x, view(inst.ys), constant).t_hat, direct) < 1e-13);
}

TEST_CASE("non-finite prediction names the unit") {
  auto inst = test::random_instance(20, 1, 5, 2);
  const auto bad = wrap(std::make_shared<ConstantModel>(std::nan("")));
  try {
    model_assisted(inst.sample, inst.x, view(inst.ys), bad);
    FAIL("expected a predictor error");
  } catch (const PredictorError& e) {
    CHECK(e.unit() == 0);
  }
}

TEST_CASE("GREG recovers a noiseless linear model") {
  auto inst = test::random_instance(200, 4, 30, 3, 0.0, true);
  const auto fit = fit_greg(inst.sample, inst.xs, inst.ys);
  const auto* lm = fit.model_as<LinearModel>();
  REQUIRE(lm != nullptr);
  // The truth: intercept 3 plus the instance's slopes; compare predictions.
  for (Index i = 0; i < inst.x.rows(); ++i) {
    const Vector row = inst.x.row(i).transpose();
    CHECK(std::abs(lm->predict(view(row)) - inst.y[i]) < 1e-8);
  }
  CHECK(rel_err(model_assisted(inst.sample, inst.x, view(inst.ys), fit).t_hat, inst.y.sum()) < 1e-10);
}

TEST_CASE("GREG on a ones column is the Hajek mean") {
  auto inst = test::random_instance(40, 1, 8, 4, 1.0, true);
  const Matrix ones = Matrix::Ones(8, 1);
  const auto fit = fit_greg(inst.sample, ones, inst.ys, false);
  const double hajek = inst.sample.weights.dot(inst.ys) / inst.sample.weights.sum();
  CHECK(rel_err(fit.model_as<LinearModel>()->coefficients()[0], hajek) < 1e-12);
}

TEST_CASE("duplicated column is rejected as singular") {
  auto inst = test::random_instance(40, 2, 10, 5);
  Matrix dup(10, 3);
  dup << inst.xs, inst.xs.col(0);
  CHECK_THROWS_AS(fit_greg(inst.sample, dup, inst.ys), SingularityError);
}

TEST_CASE("GREG weights calibrate and reproduce the GREG total") {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    auto inst = test::random_instance(120, 3, 25, seed, 2.0, seed % 2 == 0);
    const Matrix xs1 = prepend_intercept(inst.xs);
    const Vector tx = prepend_intercept(inst.x).colwise().sum().transpose();
    const Vector w = greg_weights(inst.sample, xs1, tx);
    const Vector calibrated = xs1.transpose() * w;
    for (Index j = 0; j < tx.size(); ++j) CHECK(rel_err(calibrated[j], tx[j]) < 1e-8);
    const auto fit = fit_greg(inst.sample, inst.xs, inst.ys);
    const double t_ma = model_assisted(inst.sample, inst.x, view(inst.ys), fit).t_hat;
    CHECK(rel_err(w.dot(inst.ys), t_ma) < 1e-8);
    // With an intercept the correction vanishes: total of fitted values.
    CHECK(rel_err(fit.predict(inst.x).sum(), t_ma) < 1e-8);
  }
}

TEST_CASE("balanced sample keeps the design weights") {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  const auto s = make_sample({0, 3}, Vector::Constant(2, 0.5));
  Matrix xs(2, 2);
  xs << 1, 1, 1, 4;
  const Vector tx = (Vector(2) << 4, 10).finished();
  const Vector w = greg_weights(s, xs, tx);
  CHECK(w[0] == doctest::Approx(2.0));
  CHECK(w[1] == doctest::Approx(2.0));
}

TEST_CASE("GREG with intercept is location-shift equivariant") {
  auto inst = test::random_instance(80, 2, 20, 6, 3.0, true);
  const double c = 123.5;
  const Vector shifted = inst.ys.array() + c;
  const double base = model_assisted(inst.sample, inst.x, view(inst.ys), fit_greg(inst.sample, inst.xs, inst.ys)).t_hat;
  const double moved =
      model_assisted(inst.sample, inst.x, view(shifted), fit_greg(inst.sample, inst.xs, shifted)).t_hat;
  CHECK(std::abs(moved - base - 80.0 * c) < 1e-8 * std::abs(base));
}
