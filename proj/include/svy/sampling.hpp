#pragma once

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "svy/population.hpp"
#include "svy/rng.hpp"
#include "svy/types.hpp"

namespace svy {

struct Srswor {
  Index n = 0;
};

struct ProportionalAllocation {};
// Neyman allocation on the within-stratum standard deviation of one
// auxiliary column.
struct OptimalAllocation {
  Index aux_column = 0;
};
using Allocation = std::variant<ProportionalAllocation, OptimalAllocation>;

struct StratifiedSrs {
  Allocation allocation;
  Index n = 0;
};

using SamplingDesign = std::variant<Srswor, StratifiedSrs>;

// Selected units in ascending population order with their first-order
// inclusion probabilities and design weights 1/pi.
struct DrawnSample {
  std::vector<Index> indices;
  Vector pi;
  Vector weights;

  Index size() const noexcept { return static_cast<Index>(indices.size()); }
};

DrawnSample make_sample(std::vector<Index> indices, Vector pi);

// Stratum sample sizes implied by a stratified design on pop.
std::vector<Index> allocate(const StratifiedSrs& design, const FinitePopulation& pop);

DrawnSample draw(const SamplingDesign& design, const FinitePopulation& pop, Stream& rng);

std::vector<Index> proportional_allocation(std::span<const Index> stratum_sizes, Index n);
std::vector<Index> optimal_allocation(std::span<const Index> stratum_sizes,
                                      std::span<const double> stratum_sds, Index n);

// Exhaustive SRSWOR design: every n-subset of {0..N-1} in lexicographic
// order, each with probability 1/C(N,n).
struct SrsworEnumeration {
  Index N = 0;
  Index n = 0;
  std::vector<std::vector<Index>> subsets;
  double probability = 0.0;
  double joint_inclusion = 0.0;  // n(n-1) / (N(N-1))

  DrawnSample sample(std::size_t k) const;
};

inline constexpr double kMaxEnumeratedSubsets = 1e6;

double binomial_coefficient(Index N, Index n);
SrsworEnumeration enumerate_srswor(Index N, Index n);

// Design expectation of a sample statistic under exhaustive SRSWOR.
double srswor_expectation(const SrsworEnumeration& design,
                          const std::function<double(const DrawnSample&)>& statistic);

}  // namespace svy
