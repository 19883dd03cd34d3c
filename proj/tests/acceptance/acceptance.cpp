// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "svy/baselines.hpp"
#include "svy/error.hpp"
#include "svy/estimators.hpp"
#include "svy/montecarlo.hpp"
#include "svy/penalized.hpp"
#include "svy/report.hpp"
#include "svy/sampling.hpp"
#include "svy/trees.hpp"

using namespace svy;
using test::rel_err;
using test::view;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

const McRow& row_of(const McReport& report, const std::string& method, Index d) {
  for (const auto& row : report.rows) {
    if (row.method == method && row.d_noise == d) return row;
  }
  throw Error("acceptance", "missing report row " + method + "@" + std::to_string(d));
}

std::string re_table(const McReport& report) {
  std::string out;
  for (const auto& row : report.rows) {
    out += "    " + row.method + " d=" + std::to_string(row.d_noise) +
           fmt(": RE %.2f%%  RB %.3f%%\n", row.re_percent, row.rb_percent);
  }
  return out;
}

// 1. Exhaustive-design unbiasedness at N = 6.
Outcome exhaustive_unbiasedness() {
  Outcome out;
  Stream rng(101);
  Matrix x(6, 1);
  Vector y_arbitrary(6);
  Vector y_linear(6);
  for (Index i = 0; i < 6; ++i) {
    x(i, 0) = 1.0 + static_cast<double>(i) + rng.uniform();
    y_arbitrary[i] = rng.normal(20.0, 15.0);
    y_linear[i] = 4.0 + 2.5 * x(i, 0);
  }
  double worst_ht = 0.0;
  double worst_greg = 0.0;
  for (Index n : {2, 3}) {
    const auto design = enumerate_srswor(6, n);
    for (const Vector* y : {&y_arbitrary, &y_linear}) {
      const double mean = srswor_expectation(design, [&](const DrawnSample& s) {
        const Vector ys = gather(*y, s.indices);
        return horvitz_thompson(s, view(ys)).t_hat;
      });
      worst_ht = std::max(worst_ht, rel_err(mean, y->sum()));
    }
    const double greg_mean = srswor_expectation(design, [&](const DrawnSample& s) {
      const Vector ys = gather(y_linear, s.indices);
      const Matrix xs = gather_rows(x, s.indices);
      return model_assisted(s, x, view(ys), fit_greg(s, xs, ys)).t_hat;
    });
    worst_greg = std::max(worst_greg, std::abs(greg_mean - y_linear.sum()) / std::abs(y_linear.sum()));
  }
  out.require(worst_ht <= 1e-10, fmt("HT expectation rel error %.3g > 1e-10", worst_ht));
  out.require(worst_greg < 0.02, fmt("GREG relative bias %.3g >= 2%%", worst_greg));
  if (out.pass) out.detail = fmt("HT rel err %.2g, GREG |bias|/t %.2g", worst_ht, worst_greg);
  return out;
}

// 2. Calibration, ridge duality, shrinkage and lasso norm bound.
Outcome calibration_identities() {
  Outcome out;
  const FitOptions raw{false, false};
  const FitOptions centered{true, false};
  double worst_cal = 0.0;
  double worst_dual = 0.0;
  int shrink_fail = 0;
  int l1_fail = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Index p = 2 + static_cast<Index>(seed % 7);
    auto inst = test::random_instance(300, p, 30 + static_cast<Index>(seed % 50), seed, 2.0, seed % 2 == 0);
    const Matrix xs1 = prepend_intercept(inst.xs);
    const Matrix x1 = prepend_intercept(inst.x);
    const Vector tx = x1.colwise().sum().transpose();

    const Vector w = greg_weights(inst.sample, xs1, tx);
    const Vector calibrated = xs1.transpose() * w;
    for (Index j = 0; j < tx.size(); ++j) worst_cal = std::max(worst_cal, rel_err(calibrated[j], tx[j]));

    for (double lambda : {0.1, 10.0, 1000.0}) {
      const Vector wr = ridge_weights(inst.sample, xs1, tx, lambda);
      const auto fit = fit_ridge(inst.sample, xs1, inst.ys, lambda, raw);
      const double t_ma = model_assisted(inst.sample, x1, view(inst.ys), fit).t_hat;
      worst_dual = std::max(worst_dual, rel_err(wr.dot(inst.ys), t_ma));
    }

    const Vector ols = fit_greg(inst.sample, inst.xs, inst.ys).model_as<LinearModel>()->coefficients();
    double previous = ols.norm();
    for (double lambda : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
      const double norm =
          fit_ridge(inst.sample, inst.xs, inst.ys, lambda, centered).model_as<LinearModel>()->coefficients().norm();
      if (!(norm < previous)) ++shrink_fail;
      previous = norm;
    }

    const auto problem = PenalizedProblem::build(inst.sample.weights, inst.xs, inst.ys, centered);
    const double lmax = lambda_max(problem, 1.0);
    for (double frac : {0.001, 0.05, 0.3, 0.9}) {
      const auto lasso = fit_elastic_net(inst.sample, inst.xs, inst.ys, {frac * lmax, 1.0, false}, {}, centered);
      const double l1 = lasso.model_as<LinearModel>()->coefficients().lpNorm<1>();
      if (l1 > ols.lpNorm<1>() * (1.0 + 1e-12)) ++l1_fail;
    }
  }
  out.require(worst_cal <= 1e-8, fmt("calibration rel error %.3g > 1e-8", worst_cal));
  out.require(worst_dual <= 1e-8, fmt("ridge duality rel error %.3g > 1e-8", worst_dual));
  out.require(shrink_fail == 0, fmt("ridge norm not strictly decreasing in %.0f cases", shrink_fail));
  out.require(l1_fail == 0, fmt("lasso L1 norm above OLS in %.0f cases", l1_fail));
  if (out.pass) out.detail = fmt("calibration %.2g, duality %.2g", worst_cal, worst_dual);
  return out;
}

// 3. Orthogonal-design oracle for lasso and elastic net.
Outcome orthogonal_oracle() {
  Outcome out;
  const FitOptions raw{false, false};
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Index p = 3 + static_cast<Index>(seed % 10);
    const auto inst = test::orthogonal_instance(30 + 2 * p, p, 1000 + seed);
    for (double alpha : {1.0, 0.7, 0.3}) {
      for (double lambda : {0.01, 0.2, 1.0, 5.0}) {
        const auto fit = fit_elastic_net(inst.sample, inst.xs, inst.ys, {lambda, alpha, false}, {}, raw);
        const Vector b = fit.model_as<LinearModel>()->coefficients();
        const Vector oracle = test::orthogonal_closed_form(inst, lambda, alpha);
        worst = std::max(worst, (b - oracle).cwiseAbs().maxCoeff());
      }
    }
  }
  out.require(worst <= 1e-8, fmt("max abs deviation %.3g > 1e-8", worst));
  if (out.pass) out.detail = fmt("max abs deviation %.2g", worst);
  return out;
}

// 4. Tree leaf discipline, projection identity and bagged identity.
Outcome tree_identities() {
  Outcome out;
  int bad_leaves = 0;
  int constant_y = 0;
  double worst_correction = 0.0;
  double worst_bagged = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Index p = 2 + static_cast<Index>(seed % 9);
    auto inst = test::random_instance(1500, p, 300, 5000 + seed, 3.0, seed % 2 == 0);
    if (seed % 10 == 0) inst.ys = inst.ys.array().round() / 8.0;  // coarse y: exercises ties
    const auto tree = grow_tree(inst.sample, inst.xs, inst.ys, {5});
    constant_y += tree->constant_y_exceptions();
    if (tree->discipline_exceptions() != tree->constant_y_exceptions()) ++bad_leaves;
    for (Index size : tree->leaf_sizes()) {
      if (size < 5 || (size > 9 && tree->constant_y_exceptions() == 0)) ++bad_leaves;
    }
    Vector y_full = inst.y;
    if (seed % 10 == 0) y_full = y_full.array().round() / 8.0;
    const Vector ys = gather(y_full, inst.sample.indices);
    const auto est = tree_ma_estimate(inst.x, inst.sample, view(ys), *tree);
    worst_correction = std::max(worst_correction, std::abs(est.diagnostics.at("correction")) / std::abs(est.t_hat));

    ForestSpec spec;
    spec.trees = 5;
    const auto fit = fit_forest(inst.sample, inst.xs, inst.ys, spec, Stream(seed));
    const auto* rf = fit.model_as<RandomForest>();
    const auto f_est = forest_ma_estimate(inst.x, inst.sample, view(inst.ys), *rf);
    const auto per_tree = forest_tree_estimates(inst.x, inst.sample, view(inst.ys), *rf);
    double mean = 0.0;
    for (double t : per_tree) mean += t;
    mean /= static_cast<double>(per_tree.size());
    worst_bagged = std::max(worst_bagged, rel_err(f_est.t_hat, mean));
  }
  out.require(bad_leaves == 0, fmt("%.0f leaf-size violations", bad_leaves));
  out.require(worst_correction <= 1e-10, fmt("tree correction %.3g > 1e-10 |t|", worst_correction));
  out.require(worst_bagged <= 1e-10, fmt("bagged identity rel error %.3g > 1e-10", worst_bagged));
  if (out.pass) {
    out.detail = fmt("correction %.2g, bagged %.2g, constant-y exceptions %.0f", worst_correction, worst_bagged,
                     constant_y);
  }
  return out;
}

McScenario linear_scenario() {
  McScenario sc;
  GeneratorSource gen;
  gen.aux = AuxiliaryParams{2000, 200, 0.9, 20231, 180.0, 40.0};
  sc.population = gen;
  sc.model = DgpModel{DgpVariant::Y1, std::nullopt, 20232};
  sc.design = Srswor{200};
  sc.replicates = 500;
  sc.roster = {make_method(MethodKind::Ht), make_method(MethodKind::Greg), make_method(MethodKind::Ridge),
               make_method(MethodKind::Lasso), make_method(MethodKind::ElasticNet)};
  sc.d_noise_levels = {5, 150};
  sc.master_seed = 20233;
  sc.threads = 0;
  sc.log_estimates = false;
  return sc;
}

// 5. High-dimensional degradation of GREG on a linear population.
Outcome linear_regime() {
  Outcome out;
  const auto report = run_scenario(linear_scenario());
  const double greg5 = row_of(report, "greg", 5).re_percent;
  const double greg150 = row_of(report, "greg", 150).re_percent;
  out.require(greg5 < 30.0, fmt("(a) GREG RE %.2f at d=5 not < 30", greg5));
  out.require(greg150 >= 3.0 * greg5, fmt("(b) GREG RE ratio %.3f < 3", greg150 / greg5));
  for (const char* m : {"ridge", "lasso", "en"}) {
    const double lo = row_of(report, m, 5).re_percent;
    const double hi = row_of(report, m, 150).re_percent;
    out.require(hi <= 2.0 * lo && lo <= 2.0 * hi,
                std::string("(c) ") + m + fmt(" RE %.2f -> %.2f outside factor 2", lo, hi));
  }
  for (const auto& row : report.rows) {
    out.require(std::abs(row.rb_percent) < 2.0,
                "(d) " + row.method + fmt(" |RB| %.3f%% at d=%.0f", row.rb_percent, row.d_noise));
  }
  out.detail += "\n" + re_table(report);
  return out;
}

// 6. Nonlinear regime: forest beats HT, GREG breaks down at d = 100.
Outcome nonlinear_regime() {
  Outcome out;
  McScenario sc;
  GeneratorSource gen;
  gen.aux = AuxiliaryParams{2000, 200, 0.9, 30311, 0.5, 0.25};
  sc.population = gen;
  sc.model = DgpModel{DgpVariant::Y3, std::nullopt, 30312};
  sc.design = Srswor{200};
  sc.replicates = 300;
  sc.roster = {make_method(MethodKind::Ht), make_method(MethodKind::Greg), make_method(MethodKind::Forest)};
  sc.d_noise_levels = {5, 100};
  sc.master_seed = 30313;
  sc.threads = 0;
  sc.log_estimates = false;
  const auto report = run_scenario(sc);
  for (Index d : {5, 100}) {
    const double rf = row_of(report, "rf", d).re_percent;
    out.require(rf < 100.0, fmt("forest RE %.2f at d=%.0f not < 100", rf, static_cast<double>(d)));
  }
  const double greg = row_of(report, "greg", 100).re_percent;
  out.require(greg > 100.0, fmt("GREG RE %.2f at d=100 not > 100", greg));
  out.detail += "\n" + re_table(report);
  return out;
}

McScenario stratified_scenario() {
  McScenario sc;
  GeneratorSource gen;
  gen.aux = AuxiliaryParams{1200, 40, 0.8, 40411, 180.0, 40.0};
  gen.strata = StrataSpec{0, 4, {0.1, 0.2, 0.3, 0.4}};
  sc.population = gen;
  sc.model = DgpModel{DgpVariant::Y1, std::nullopt, 40412};
  sc.design = StratifiedSrs{ProportionalAllocation{}, 150};
  sc.replicates = 40;
  sc.roster = {make_method(MethodKind::Ht), make_method(MethodKind::Greg), make_method(MethodKind::Cart)};
  sc.d_noise_levels = {0, 10, 30};
  sc.master_seed = 40413;
  sc.threads = 0;
  return sc;
}

// 7. Proportional allocation and paired seeds under stratified sampling.
Outcome stratified_designs() {
  Outcome out;
  const auto sc = stratified_scenario();
  const auto pop = build_population(sc);
  const auto& design = std::get<StratifiedSrs>(sc.design);
  const auto nh = allocate(design, pop);
  const auto Nh = pop.stratum_sizes();
  Index total = 0;
  for (Index v : nh) total += v;
  out.require(pop.stratum_count() == 4, "population does not have 4 strata");
  out.require(total == design.n, "allocation does not sum to n");
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Stream rng(seed);
    const auto sample = draw(sc.design, pop, rng);
    out.require(sample.size() == design.n, "drawn sample size differs from n");
    std::vector<Index> counts(4, 0);
    for (Index k = 0; k < sample.size(); ++k) {
      const auto i = sample.indices[static_cast<std::size_t>(k)];
      const auto h = static_cast<std::size_t>(pop.strata()[static_cast<std::size_t>(i)] - 1);
      ++counts[h];
      const double expected = static_cast<double>(nh[h]) / static_cast<double>(Nh[h]);
      out.require(sample.pi[k] == expected, "pi differs from n_h / N_h");
    }
    out.require(counts == nh, "per-stratum sample counts differ from the allocation");
  }
  const auto report = run_scenario(sc, pop);
  const auto& ref = row_of(report, "ht", 0);
  for (Index d : {10, 30}) {
    const auto& row = row_of(report, "ht", d);
    out.require(row.mse == ref.mse && row.rb_percent == ref.rb_percent && row.re_percent == ref.re_percent,
                "HT row differs across d_noise levels");
  }
  std::vector<double> ht0;
  std::vector<std::vector<double>> other(2);
  for (const auto& e : report.log) {
    if (e.method != "ht") continue;
    if (e.d_noise == 0) {
      ht0.push_back(e.estimate);
    } else {
      other[e.d_noise == 10 ? 0 : 1].push_back(e.estimate);
    }
  }
  out.require(ht0 == other[0] && ht0 == other[1], "per-replicate HT estimates differ across levels");
  if (out.pass) {
    std::string alloc;
    for (std::size_t h = 0; h < nh.size(); ++h) {
      alloc += (h ? "," : "") + std::to_string(nh[h]) + "/" + std::to_string(Nh[h]);
    }
    out.detail = "n_h/N_h = " + alloc;
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 8. Byte-identical reports from repeated runs.
Outcome determinism() {
  Outcome out;
  auto sc = stratified_scenario();
  sc.roster.push_back(make_method(MethodKind::Ridge));
  sc.roster.push_back(make_method(MethodKind::Lasso));
  auto rf = make_method(MethodKind::Forest);
  rf.forest.trees = 50;
  sc.roster.push_back(rf);
  sc.roster.push_back(make_method(MethodKind::Knn));
  sc.roster.push_back(make_method(MethodKind::Pcr));
  sc.replicates = 15;
  sc.threads = 1;
  const std::string a = "acceptance_det_a.csv";
  const std::string b = "acceptance_det_b.csv";
  write_report(run_scenario(sc), a);
  sc.threads = 3;
  write_report(run_scenario(sc), b);
  const auto ta = slurp(a);
  const auto tb = slurp(b);
  out.require(!ta.empty(), "report file is empty");
  out.require(ta == tb, "report files differ");
  std::remove(a.c_str());
  std::remove(b.c_str());
  if (out.pass) out.detail = std::to_string(ta.size()) + " bytes identical";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "exhaustive-design unbiasedness", 1.0, exhaustive_unbiasedness},
      {2, "calibration identities", 30.0, calibration_identities},
      {3, "orthogonal-design oracle", 30.0, orthogonal_oracle},
      {4, "tree discipline and identities", 60.0, tree_identities},
      {5, "linear population, GREG degradation", 15.0 * 60.0, linear_regime},
      {6, "nonlinear population, forest vs GREG", 20.0 * 60.0, nonlinear_regime},
      {7, "stratified designs", 0.0, stratified_designs},
      {8, "determinism", 0.0, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
      out.pass = false;
      out.detail = fmt("runtime %.1f s over budget %.0f s; ", secs, c.budget_seconds) + out.detail;
    }
    if (!out.pass) ++failures;
    std::printf("%s criterion %d: %s (%.2f s) %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
