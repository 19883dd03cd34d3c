#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "svy/baselines.hpp"
#include "svy/penalized.hpp"
#include "svy/population.hpp"
#include "svy/sampling.hpp"
#include "svy/trees.hpp"

namespace svy {

struct StrataSpec {
  Index column = 0;  // zero-based
  int count = 1;
  std::vector<double> fractions;
};

struct GeneratorSource {
  AuxiliaryParams aux;
  std::optional<StrataSpec> strata;
};

struct FileSource {
  std::string path;
  PopulationSchema schema;
  std::optional<StrataSpec> strata;
};

using PopulationSource = std::variant<GeneratorSource, FileSource>;

enum class MethodKind { Ht, Greg, Ridge, Lasso, ElasticNet, Cart, Forest, Knn, Pcr, Custom };

// What a roster method sees in one replicate.
struct ReplicateContext {
  const FinitePopulation& population;
  const Matrix& x_work;  // N x (structural + d_noise) working-model columns
  const DrawnSample& sample;
  const Matrix& xs;  // x_work rows on the sample
  const Vector& ys;
  double t_y;
  Index replicate;
  Index d_noise;
  Stream& rng;  // method stream (master_seed, replicate, label)
};

struct MethodSpec {
  std::string label;
  MethodKind kind = MethodKind::Ht;
  CvOptions cv;  // ridge / lasso / elastic net
  // Trees and forests. p0: 0 = floor(sqrt(p)), -1 = all p columns.
  ForestSpec forest;
  Index p0_mode = 0;
  std::optional<double> n0_exponent;  // n0 = ceil(n^e) when set
  Index k = 5;
  bool knn_pi_weighted = false;
  PcrSpec pcr;
  std::function<double(const ReplicateContext&)> custom;
};

MethodSpec make_method(MethodKind kind, std::string label = {});
std::string method_kind_name(MethodKind kind);
MethodKind parse_method_kind(const std::string& name);

struct McScenario {
  PopulationSource population = GeneratorSource{};
  std::optional<DgpModel> model;  // unset: y comes from the population file
  SamplingDesign design = Srswor{200};
  int replicates = 500;
  std::vector<MethodSpec> roster;
  std::vector<Index> d_noise_levels{0};
  std::vector<Index> structural;  // empty: the model's structural columns
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0: hardware concurrency
  bool log_estimates = true;
  double max_failure_rate = 0.01;
};

struct McRow {
  std::string method;
  Index d_noise = 0;
  double rb_percent = 0.0;
  double re_percent = 0.0;
  double mse = 0.0;
  int r = 0;
  std::uint64_t seed = 0;

  bool operator==(const McRow&) const = default;
};

struct EstimateLog {
  std::string method;
  Index d_noise = 0;
  Index replicate = 0;
  double estimate = 0.0;
  bool failed = false;
};

struct McReport {
  std::vector<McRow> rows;
  std::vector<EstimateLog> log;
  std::map<std::string, int> failures;  // key "method@d_noise"
  double t_y = 0.0;
};

// Builds the population the scenario describes (generator or file, then y).
FinitePopulation build_population(const McScenario& scenario, std::vector<std::string>* warnings = nullptr);

// Working-model columns at one d_noise level: structural columns followed by
// the first d columns not among them.
std::vector<Index> working_columns(const std::vector<Index>& structural, Index p, Index d_noise);

McReport run_scenario(const McScenario& scenario);
McReport run_scenario(const McScenario& scenario, const FinitePopulation& population);
McReport sweep_dnoise(const McScenario& scenario, const std::vector<Index>& levels);

// RB, MSE and RE for one method from its replicate estimates.
McRow summarize(const std::string& method, Index d_noise, std::span<const double> estimates, double t_y,
                double mse_reference, int r, std::uint64_t seed);

// Compensated summation.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace svy
