#include "svy/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "svy/error.hpp"
#include "svy/linalg.hpp"

namespace svy {

namespace {

constexpr const char* kModule = "montecarlo";

Index resolve_n0(const MethodSpec& spec, Index n) {
  if (spec.n0_exponent) {
    return std::max<Index>(1, static_cast<Index>(std::ceil(std::pow(static_cast<double>(n), *spec.n0_exponent) - 1e-12)));
  }
  return spec.forest.n0;
}

double estimate_once(const MethodSpec& spec, const ReplicateContext& ctx) {
  const std::span<const double> ys(ctx.ys.data(), static_cast<std::size_t>(ctx.ys.size()));
  switch (spec.kind) {
    case MethodKind::Ht:
      return horvitz_thompson(ctx.sample, ys).t_hat;
    case MethodKind::Greg:
      return model_assisted(ctx.sample, ctx.x_work, ys, fit_greg(ctx.sample, ctx.xs, ctx.ys, true)).t_hat;
    case MethodKind::Ridge:
    case MethodKind::Lasso:
    case MethodKind::ElasticNet: {
      const auto fitted = fit_penalized_cv(ctx.sample, ctx.xs, ctx.ys, spec.cv, ctx.rng, spec.label);
      return model_assisted(ctx.sample, ctx.x_work, ys, fitted).t_hat;
    }
    case MethodKind::Cart: {
      TreeOptions options;
      options.n0 = resolve_n0(spec, ctx.sample.size());
      const auto tree = grow_tree(ctx.sample, ctx.xs, ctx.ys, options);
      return tree_ma_estimate(ctx.x_work, ctx.sample, ys, *tree).t_hat;
    }
    case MethodKind::Forest: {
      ForestSpec forest = spec.forest;
      forest.n0 = resolve_n0(spec, ctx.sample.size());
      const Index p = ctx.xs.cols();
      forest.p0 = spec.p0_mode == -1 ? p : (spec.p0_mode == 0 ? default_p0(p) : std::min(spec.p0_mode, p));
      forest.forced_features.erase(
          std::remove_if(forest.forced_features.begin(), forest.forced_features.end(),
                         [&](Index f) { return f >= p; }),
          forest.forced_features.end());
      const auto fitted = fit_forest(ctx.sample, ctx.xs, ctx.ys, forest, ctx.rng);
      return model_assisted(ctx.sample, ctx.x_work, ys, fitted).t_hat;
    }
    case MethodKind::Knn:
      return model_assisted(ctx.sample, ctx.x_work, ys,
                            fit_knn(ctx.sample, ctx.xs, ctx.ys, spec.k, spec.knn_pi_weighted))
          .t_hat;
    case MethodKind::Pcr:
      return model_assisted(ctx.sample, ctx.x_work, ys, fit_pcr(ctx.sample, ctx.xs, ctx.ys, spec.pcr)).t_hat;
    case MethodKind::Custom:
      if (!spec.custom) throw ParameterError(kModule, "custom method '" + spec.label + "' has no callback");
      return spec.custom(ctx);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<Index> structural_for(const McScenario& scenario) {
  if (!scenario.structural.empty()) return scenario.structural;
  if (scenario.model) return structural_columns(scenario.model->variant);
  throw ParameterError(kModule, "scenario without a model must list its structural columns");
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct ReplicateResult {
  double ht = 0.0;
  std::vector<double> estimates;
  std::vector<char> failed;
};

}  // namespace

MethodSpec make_method(MethodKind kind, std::string label) {
  MethodSpec spec;
  spec.kind = kind;
  spec.label = label.empty() ? method_kind_name(kind) : std::move(label);
  switch (kind) {
    case MethodKind::Ridge:
      spec.cv.alphas = {0.0};
      break;
    case MethodKind::Lasso:
      spec.cv.alphas = {1.0};
      break;
    default:
      break;
  }
  return spec;
}

std::string method_kind_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::Ht:
      return "ht";
    case MethodKind::Greg:
      return "greg";
    case MethodKind::Ridge:
      return "ridge";
    case MethodKind::Lasso:
      return "lasso";
    case MethodKind::ElasticNet:
      return "en";
    case MethodKind::Cart:
      return "cart";
    case MethodKind::Forest:
      return "rf";
    case MethodKind::Knn:
      return "knn";
    case MethodKind::Pcr:
      return "pcr";
    case MethodKind::Custom:
      return "custom";
  }
  return "?";
}

MethodKind parse_method_kind(const std::string& name) {
  for (auto kind : {MethodKind::Ht, MethodKind::Greg, MethodKind::Ridge, MethodKind::Lasso, MethodKind::ElasticNet,
                    MethodKind::Cart, MethodKind::Forest, MethodKind::Knn, MethodKind::Pcr}) {
    if (method_kind_name(kind) == name) return kind;
  }
  throw ParameterError(kModule, "unknown estimator method '" + name + "'");
}

FinitePopulation build_population(const McScenario& scenario, std::vector<std::string>* warnings) {
  std::optional<FinitePopulation> pop;
  const StrataSpec* strata = nullptr;
  if (const auto* gen = std::get_if<GeneratorSource>(&scenario.population)) {
    pop = generate_auxiliary(gen->aux);
    if (gen->strata) strata = &*gen->strata;
  } else {
    const auto& file = std::get<FileSource>(scenario.population);
    pop = load_population(file.path, file.schema);
    if (file.strata) strata = &*file.strata;
  }
  if (strata != nullptr) *pop = stratify_by_column(*pop, strata->column, strata->count, strata->fractions);
  if (scenario.model) *pop = generate_survey_variable(*pop, *scenario.model, warnings);
  if (!pop->has_y()) throw ParameterError(kModule, "population has no survey variable and no model was given");
  return std::move(*pop);
}

std::vector<Index> working_columns(const std::vector<Index>& structural, Index p, Index d_noise) {
  std::vector<Index> cols = structural;
  for (Index c : structural) {
    if (c < 0 || c >= p) throw ParameterError(kModule, "structural column out of range");
  }
  for (Index j = 0; j < p && static_cast<Index>(cols.size()) < static_cast<Index>(structural.size()) + d_noise; ++j) {
    if (std::find(structural.begin(), structural.end(), j) == structural.end()) cols.push_back(j);
  }
  if (static_cast<Index>(cols.size()) != static_cast<Index>(structural.size()) + d_noise) {
    throw ParameterError(kModule, "d_noise = " + std::to_string(d_noise) + " exceeds the " +
                                      std::to_string(p - static_cast<Index>(structural.size())) +
                                      " available non-structural columns");
  }
  return cols;
}

McRow summarize(const std::string& method, Index d_noise, std::span<const double> estimates, double t_y,
                double mse_reference, int r, std::uint64_t seed) {
  KahanSum rel;
  KahanSum sq;
  for (double t : estimates) {
    rel.add((t - t_y) / t_y);
    sq.add((t - t_y) * (t - t_y));
  }
  const auto count = static_cast<double>(estimates.size());
  McRow row;
  row.method = method;
  row.d_noise = d_noise;
  row.rb_percent = 100.0 * rel.value() / count;
  row.mse = sq.value() / count;
  row.re_percent = mse_reference > 0.0 ? 100.0 * row.mse / mse_reference
                                       : (row.mse == 0.0 ? 100.0 : std::numeric_limits<double>::infinity());
  row.r = r;
  row.seed = seed;
  return row;
}

McReport run_scenario(const McScenario& scenario, const FinitePopulation& population) {
  if (scenario.replicates < 1) throw ParameterError(kModule, "replicate count R must be >= 1");
  if (scenario.roster.empty()) throw ParameterError(kModule, "estimator roster is empty");
  for (const auto& m : scenario.roster) {
    if (m.kind == MethodKind::Custom && !m.custom) {
      throw ParameterError(kModule, "custom method '" + m.label + "' has no callback");
    }
  }
  const auto structural = structural_for(scenario);
  const double t_y = population.total();
  const int R = scenario.replicates;
  const std::size_t M = scenario.roster.size();
  const int workers = std::min(resolve_threads(scenario.threads), R);

  // Validate every level before spending time on any of them.
  std::vector<std::vector<Index>> level_columns;
  for (Index d : scenario.d_noise_levels) level_columns.push_back(working_columns(structural, population.columns(), d));

  McReport report;
  report.t_y = t_y;
  for (std::size_t level = 0; level < scenario.d_noise_levels.size(); ++level) {
    const Index d = scenario.d_noise_levels[level];
    const Matrix x_work = gather_columns(population.x(), level_columns[level]);
    std::vector<ReplicateResult> results(static_cast<std::size_t>(R));

    auto run_replicate = [&](int r) {
      Stream sample_stream(scenario.master_seed, {static_cast<std::uint64_t>(r)});
      const DrawnSample sample = draw(scenario.design, population, sample_stream);
      const Matrix xs = gather_rows(x_work, sample.indices);
      const Vector ys = gather(population.y(), sample.indices);
      auto& out = results[static_cast<std::size_t>(r)];
      out.ht = horvitz_thompson(sample, std::span<const double>(ys.data(), static_cast<std::size_t>(ys.size()))).t_hat;
      out.estimates.assign(M, std::numeric_limits<double>::quiet_NaN());
      out.failed.assign(M, 0);
      for (std::size_t m = 0; m < M; ++m) {
        const auto& spec = scenario.roster[m];
        Stream method_stream(scenario.master_seed,
                             {static_cast<std::uint64_t>(r), label_hash(spec.label.c_str())});
        const ReplicateContext ctx{population, x_work, sample, xs, ys, t_y, static_cast<Index>(r), d, method_stream};
        try {
          const double t = estimate_once(spec, ctx);
          if (!std::isfinite(t)) throw NumericError(kModule, "non-finite estimate");
          out.estimates[m] = t;
        } catch (const Error&) {
          out.failed[m] = 1;
        }
      }
    };

    if (workers <= 1) {
      for (int r = 0; r < R; ++r) run_replicate(r);
    } else {
      std::atomic<int> next{0};
      std::vector<std::jthread> pool;
      for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
          for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) run_replicate(r);
        });
      }
    }

    std::vector<double> ht(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) ht[static_cast<std::size_t>(r)] = results[static_cast<std::size_t>(r)].ht;
    const double mse_ht = summarize("ht", d, ht, t_y, 1.0, R, scenario.master_seed).mse;

    for (std::size_t m = 0; m < M; ++m) {
      const auto& label = scenario.roster[m].label;
      std::vector<double> ok;
      ok.reserve(static_cast<std::size_t>(R));
      int failures = 0;
      for (int r = 0; r < R; ++r) {
        const auto& res = results[static_cast<std::size_t>(r)];
        if (res.failed[m]) {
          ++failures;
        } else {
          ok.push_back(res.estimates[m]);
        }
        if (scenario.log_estimates) {
          report.log.push_back({label, d, static_cast<Index>(r), res.estimates[m], res.failed[m] != 0});
        }
      }
      if (failures > 0) report.failures[label + "@" + std::to_string(d)] = failures;
      if (static_cast<double>(failures) > scenario.max_failure_rate * static_cast<double>(R) || ok.empty()) {
        throw Error(kModule, "method '" + label + "' failed in " + std::to_string(failures) + " of " +
                                 std::to_string(R) + " replicates at d_noise = " + std::to_string(d));
      }
      McRow row = summarize(label, d, ok, t_y, mse_ht, R, scenario.master_seed);
      if (scenario.roster[m].kind == MethodKind::Ht) row.re_percent = 100.0;
      report.rows.push_back(std::move(row));
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const McRow& a, const McRow& b) {
    return a.method != b.method ? a.method < b.method : a.d_noise < b.d_noise;
  });
  return report;
}

McReport run_scenario(const McScenario& scenario) { return run_scenario(scenario, build_population(scenario)); }

McReport sweep_dnoise(const McScenario& scenario, const std::vector<Index>& levels) {
  if (!std::is_sorted(levels.begin(), levels.end())) {
    throw ParameterError(kModule, "d_noise levels must be sorted ascending");
  }
  McScenario copy = scenario;
  copy.d_noise_levels = levels;
  return run_scenario(copy);
}

}  // namespace svy
