#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svy/types.hpp"

namespace svy {

// Finite population U = {1..N}: auxiliary matrix (N x p), survey variable y
// (may be unset while the population is being synthesized) and optional
// stratum labels 1..H. Immutable once constructed.
class FinitePopulation {
 public:
  FinitePopulation(std::vector<std::string> ids, Matrix x, Vector y = {},
                   std::vector<int> strata = {});

  Index size() const noexcept { return x_.rows(); }
  Index columns() const noexcept { return x_.cols(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Matrix& x() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  bool has_y() const noexcept { return y_.size() > 0; }

  bool has_strata() const noexcept { return !strata_.empty(); }
  const std::vector<int>& strata() const noexcept { return strata_; }
  int stratum_count() const noexcept { return stratum_count_; }
  // N_h for h = 1..H, stored at position h-1.
  std::vector<Index> stratum_sizes() const;

  // t_y; requires y.
  double total() const;

  FinitePopulation with_y(Vector y) const;
  FinitePopulation with_strata(std::vector<int> strata) const;

 private:
  std::vector<std::string> ids_;
  Matrix x_;
  Vector y_;
  std::vector<int> strata_;
  int stratum_count_ = 0;
};

struct AuxiliaryParams {
  Index N = 2000;
  Index p = 200;
  double rho = 0.9;
  std::uint64_t seed = 1;
  // Affine placement of the latent AR(1) curves: x = max(0, location + scale * z).
  double location = 180.0;
  double scale = 40.0;
};

// Correlated nonnegative auxiliary curves: each row is a stationary AR(1)
// sequence across columns, so corr(X_j, X_k) ~ rho^|j-k|.
FinitePopulation generate_auxiliary(const AuxiliaryParams& params);
FinitePopulation generate_auxiliary(Index N, Index p, double rho, std::uint64_t seed);

// Assigns H strata by ranking one auxiliary column. fractions (optional)
// gives relative stratum sizes; equal-size strata otherwise.
FinitePopulation stratify_by_column(const FinitePopulation& pop, Index column, int strata,
                                    const std::vector<double>& fractions = {});

enum class DgpVariant { Y1, Y2, Y3, Y4 };

struct DgpModel {
  DgpVariant variant = DgpVariant::Y1;
  // Y1, Y2, Y4: variance of the normal error. Y3: mean of the exponential
  // error before centering. Unset means the default for the variant.
  std::optional<double> noise_scale;
  std::uint64_t seed = 1;
};

double default_noise_scale(DgpVariant variant);
std::string variant_name(DgpVariant variant);
DgpVariant parse_variant(const std::string& name);

// Zero-based auxiliary columns the variant's formula reads.
std::vector<Index> structural_columns(DgpVariant variant);

// Fills y according to the variant. Y2 threshold prevalence outside
// [5%, 95%] is reported through warnings (if given).
FinitePopulation generate_survey_variable(const FinitePopulation& pop, const DgpModel& model,
                                          std::vector<std::string>* warnings = nullptr);

struct PopulationSchema {
  std::string id_column;      // empty: row numbers
  std::string y_column;       // empty: y unset
  std::string strata_column;  // empty: no strata
  std::vector<std::string> x_columns;  // empty: every remaining column
};

FinitePopulation load_population(const std::string& path, const PopulationSchema& schema);

// Header: id,x1..xp[,y][,stratum]
void save_population(const FinitePopulation& pop, const std::string& path);
std::string population_to_csv(const FinitePopulation& pop);

}  // namespace svy
