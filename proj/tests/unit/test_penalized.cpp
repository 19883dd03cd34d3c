#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "svy/error.hpp"
#include "svy/penalized.hpp"

using namespace svy;
using test::rel_err;
using test::view;

namespace {

const FitOptions kRaw{false, false};         // no intercept, no scaling
const FitOptions kCentered{true, false};     // unpenalized intercept, raw scale

Vector slopes(const FittedPredictor& f) { return f.model_as<LinearModel>()->coefficients(); }

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(5.0, 2.0) == 3.0);
  CHECK(soft_threshold(-1.0, 2.0) == 0.0);
  CHECK(soft_threshold(-5.0, 2.0) == -3.0);
  for (double lambda : {0.0, 1.0, 3.0}) {
    for (int k = -100; k <= 100; ++k) {
      const double z = 0.1 * k;
      const double expected = (z > 0 ? 1.0 : (z < 0 ? -1.0 : 0.0)) * std::max(std::abs(z) - lambda, 0.0);
      CHECK(soft_threshold(z, lambda) == expected);
    }
  }
}

TEST_CASE("ridge limits") {
  auto inst = test::random_instance(200, 4, 40, 1, 1.0, true);
  const Vector ols = slopes(fit_greg(inst.sample, inst.xs, inst.ys));
  const Vector r0 = slopes(fit_ridge(inst.sample, inst.xs, inst.ys, 0.0));
  for (Index j = 0; j < 4; ++j) CHECK(std::abs(r0[j] - ols[j]) < 1e-8 * std::max(1.0, std::abs(ols[j])));
  CHECK(slopes(fit_ridge(inst.sample, inst.xs, inst.ys, 1e12)).norm() < 1e-6);
}

TEST_CASE("ridge norm shrinks strictly with lambda") {
  auto inst = test::random_instance(200, 5, 40, 2, 1.0, true);
  double previous = slopes(fit_greg(inst.sample, inst.xs, inst.ys)).norm();
  for (double lambda : {0.1, 1.0, 10.0, 100.0}) {
    const double norm = slopes(fit_ridge(inst.sample, inst.xs, inst.ys, lambda, kCentered)).norm();
    CHECK(norm < previous);
    previous = norm;
  }
}

TEST_CASE("ridge weights: limits and duality") {
  auto inst = test::random_instance(150, 3, 30, 3, 2.0, true);
  const Matrix xs1 = prepend_intercept(inst.xs);
  const Vector tx = prepend_intercept(inst.x).colwise().sum().transpose();
  const Vector w0 = ridge_weights(inst.sample, xs1, tx, 0.0);
  const Vector wg = greg_weights(inst.sample, xs1, tx);
  CHECK((w0 - wg).cwiseAbs().maxCoeff() < 1e-10 * wg.cwiseAbs().maxCoeff());
  const Vector tiny = ridge_weights(inst.sample, xs1, tx, 1e-9);
  CHECK((tiny - wg).cwiseAbs().maxCoeff() < 1e-6 * wg.cwiseAbs().maxCoeff());

  for (double lambda : {0.5, 5.0, 50.0}) {
    const Vector w = ridge_weights(inst.sample, xs1, tx, lambda);
    const auto fit = fit_ridge(inst.sample, xs1, inst.ys, lambda, kRaw);
    const Matrix x1 = prepend_intercept(inst.x);
    const double t_ma = model_assisted(inst.sample, x1, view(inst.ys), fit).t_hat;
    CHECK(rel_err(w.dot(inst.ys), t_ma) < 1e-8);
  }

  const Vector balanced_tx = xs1.transpose() * inst.sample.weights;
  const Vector wb = ridge_weights(inst.sample, xs1, balanced_tx, 3.0);
  CHECK((wb - inst.sample.weights).cwiseAbs().maxCoeff() < 1e-10 * inst.sample.weights.maxCoeff());
}

TEST_CASE("elastic net at lambda 0 is GREG") {
  auto inst = test::random_instance(200, 4, 50, 4, 1.0, true);
  const Vector ols = slopes(fit_greg(inst.sample, inst.xs, inst.ys));
  for (double alpha : {1.0, 0.5}) {
    const auto fit = fit_elastic_net(inst.sample, inst.xs, inst.ys, {0.0, alpha, false}, {1e-12, 100000});
    const Vector b = slopes(fit);
    for (Index j = 0; j < 4; ++j) CHECK(std::abs(b[j] - ols[j]) < 1e-6 * std::max(1.0, std::abs(ols[j])));
  }
}

TEST_CASE("orthogonal design matches the closed form") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = test::orthogonal_instance(40, 6, seed);
    for (double alpha : {1.0, 0.3}) {
      for (double lambda : {0.05, 0.5, 2.0}) {
        const auto fit = fit_elastic_net(inst.sample, inst.xs, inst.ys, {lambda, alpha, false}, {}, kRaw);
        const Vector b = slopes(fit);
        const Vector oracle = test::orthogonal_closed_form(inst, lambda, alpha);
        CHECK((b - oracle).cwiseAbs().maxCoeff() < 1e-8);
      }
    }
  }
}

TEST_CASE("lambda_max zeroes every slope") {
  auto inst = test::random_instance(300, 6, 60, 5, 1.0, true);
  const auto problem = PenalizedProblem::build(inst.sample.weights, inst.xs, inst.ys, {});
  double direct = 0.0;
  for (Index j = 0; j < 6; ++j) direct = std::max(direct, std::abs(problem.cross[j]));
  CHECK(lambda_max(problem, 1.0) == direct);
  const auto at_max = fit_elastic_net(inst.sample, inst.xs, inst.ys, {direct, 1.0, false});
  CHECK(slopes(at_max).cwiseAbs().maxCoeff() == 0.0);
  const auto below = fit_elastic_net(inst.sample, inst.xs, inst.ys, {0.95 * direct, 1.0, false});
  CHECK(slopes(below).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("lasso and elastic-net norm bounds and objective monotonicity") {
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    auto inst = test::random_instance(150, 5, 40, seed, 3.0, seed % 2 == 1);
    const Vector ols = slopes(fit_greg(inst.sample, inst.xs, inst.ys));
    const auto problem = PenalizedProblem::build(inst.sample.weights, inst.xs, inst.ys, kCentered);
    const double lmax = lambda_max(problem, 1.0);
    for (double frac : {0.01, 0.1, 0.5}) {
      const double lambda = frac * lmax;
      const auto lasso = fit_elastic_net(inst.sample, inst.xs, inst.ys, {lambda, 1.0, false}, {}, kCentered);
      CHECK(slopes(lasso).lpNorm<1>() <= ols.lpNorm<1>() * (1.0 + 1e-12));
      CHECK(lasso.diagnostics().at("max_objective_increase") <= 1e-9 * problem.yty);

      const double alpha = 0.4;
      const auto en = fit_elastic_net(inst.sample, inst.xs, inst.ys, {lambda, alpha, false}, {}, kCentered);
      const double l1 = lambda * alpha;
      const double l2 = lambda * (1.0 - alpha);
      const Vector b = slopes(en);
      CHECK(l2 * b.squaredNorm() <= l1 * ols.lpNorm<1>() + l2 * std::pow(ols.lpNorm<1>(), 2) + 1e-9);
      CHECK(en.diagnostics().at("max_objective_increase") <= 1e-9 * problem.yty);
    }
  }
}

TEST_CASE("coordinate descent objective trace never rises") {
  auto inst = test::random_instance(400, 30, 60, 8, 1.0, true);
  const auto problem = PenalizedProblem::build(inst.sample.weights, inst.xs, inst.ys, {});
  const double lambda = 1e-3 * lambda_max(problem, 1.0);
  const auto result = coordinate_descent(problem, lambda, 0.7, {});
  for (std::size_t k = 1; k < result.objective_trace.size(); ++k) {
    CHECK(result.objective_trace[k] <= result.objective_trace[k - 1] + 1e-12 * std::abs(result.objective_trace[0]));
  }
  CHECK(result.objective_trace.back() == doctest::Approx(problem.objective(result.beta, lambda, 0.7)));
}

TEST_CASE("non-convergence carries the last iterate and trace") {
  auto inst = test::random_instance(400, 20, 40, 9, 1.0);
  const auto problem = PenalizedProblem::build(inst.sample.weights, inst.xs, inst.ys, {});
  try {
    coordinate_descent(problem, 1e-6 * lambda_max(problem, 1.0), 1.0, {1e-14, 1});
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_iterate().size() == 20);
    CHECK(e.objective_trace().size() == 2);
  }
}

TEST_CASE("invalid penalties are parameter errors") {
  auto inst = test::random_instance(50, 2, 10, 10);
  CHECK_THROWS_AS(fit_ridge(inst.sample, inst.xs, inst.ys, -1.0), ParameterError);
  CHECK_THROWS_AS(fit_elastic_net(inst.sample, inst.xs, inst.ys, {1.0, 1.5, false}), ParameterError);
  CHECK_THROWS_AS(fit_elastic_net(inst.sample, inst.xs, inst.ys, {1.0, 1.0, false}, {0.0, 10}), ParameterError);
}

TEST_CASE("zero-variance columns keep a zero coefficient") {
  auto inst = test::random_instance(100, 3, 30, 11, 1.0, true);
  inst.xs.col(1).setConstant(4.0);
  const auto fit = fit_elastic_net(inst.sample, inst.xs, inst.ys, {1.0, 0.5, false});
  CHECK(slopes(fit)[1] == 0.0);
}

TEST_CASE("cross-validation: singleton grids and determinism") {
  auto inst = test::random_instance(300, 6, 60, 12, 2.0);
  CvOptions single;
  single.lambdas = {2.5};
  single.alphas = {0.5};
  single.folds = 5;
  Stream rng(1);
  const auto one = cross_validate(inst.sample, inst.xs, inst.ys, single, rng);
  CHECK(one.best.lambda == 2.5);
  CHECK(one.best.alpha == 0.5);

  CvOptions opts;
  opts.n_lambda = 20;
  opts.folds = 5;
  Stream a(7), b(7);
  const auto ra = cross_validate(inst.sample, inst.xs, inst.ys, opts, a);
  const auto rb = cross_validate(inst.sample, inst.xs, inst.ys, opts, b);
  CHECK(ra.best.lambda == rb.best.lambda);
  CHECK(ra.best.alpha == rb.best.alpha);
  CHECK(ra.errors == rb.errors);
  CHECK(ra.fold_of == rb.fold_of);

  CvOptions bad = opts;
  bad.folds = 1;
  CHECK_THROWS_AS(cross_validate(inst.sample, inst.xs, inst.ys, bad, a), ParameterError);
}

TEST_CASE("cross-validation picks the lambda with the lower recomputed error") {
  auto inst = test::random_instance(300, 8, 80, 13, 4.0, true);
  CvOptions opts;
  opts.lambdas = {0.01, 500.0};
  opts.alphas = {1.0};
  opts.folds = 4;
  opts.fit.scale_response = false;
  Stream rng(3);
  const auto cv = cross_validate(inst.sample, inst.xs, inst.ys, opts, rng);

  // Recompute the held-out error for each lambda from the fold labels.
  std::vector<double> err(2, 0.0);
  for (int fold = 0; fold < 4; ++fold) {
    std::vector<Index> train, held;
    for (Index k = 0; k < inst.sample.size(); ++k) {
      (cv.fold_of[static_cast<std::size_t>(k)] == fold ? held : train).push_back(k);
    }
    const auto sub = make_sample(train, gather(inst.sample.pi, train));
    const Matrix xt = gather_rows(inst.xs, train);
    const Vector yt = gather(inst.ys, train);
    for (std::size_t l = 0; l < 2; ++l) {
      const auto fit = fit_elastic_net(sub, xt, yt, {opts.lambdas[l], 1.0, false}, opts.cd, opts.fit);
      for (Index h : held) {
        const double r = inst.ys[h] - fit.predict(std::span<const double>(inst.xs.row(h).eval().data(), 8));
        err[l] += r * r / inst.sample.pi[h];
      }
    }
  }
  // The grid is sorted descending internally.
  CHECK(rel_err(cv.errors[0][0], err[1]) < 1e-6);
  CHECK(rel_err(cv.errors[0][1], err[0]) < 1e-6);
  CHECK(err[0] != err[1]);
  CHECK(cv.best.lambda == (err[0] < err[1] ? 0.01 : 500.0));
}

TEST_CASE("fit_penalized_cv labels the method and refits on the sample") {
  auto inst = test::random_instance(300, 6, 60, 14, 2.0);
  CvOptions opts;
  opts.n_lambda = 15;
  opts.folds = 5;
  opts.alphas = {1.0};
  Stream rng(2);
  const auto fit = fit_penalized_cv(inst.sample, inst.xs, inst.ys, opts, rng, "lasso");
  CHECK(fit.method() == "lasso");
  CHECK(fit.diagnostics().at("alpha") == 1.0);
  CHECK(fit.model_as<LinearModel>() != nullptr);
}
