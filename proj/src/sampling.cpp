#include "svy/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "svy/error.hpp"

namespace svy {

namespace {

// Integerizes real quotas within [lo, hi] so they sum to n: floors first,
// then the largest fractional remainders (lowest index on ties).
std::vector<Index> largest_remainder(const std::vector<double>& quotas, Index n,
                                     const std::vector<Index>& lo, const std::vector<Index>& hi) {
  const std::size_t H = quotas.size();
  std::vector<Index> out(H);
  Index assigned = 0;
  for (std::size_t h = 0; h < H; ++h) {
    out[h] = std::clamp(static_cast<Index>(std::floor(quotas[h] + 1e-9)), lo[h], hi[h]);
    assigned += out[h];
  }
  std::vector<std::size_t> order(H);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a] - static_cast<double>(out[a]) > quotas[b] - static_cast<double>(out[b]);
  });
  while (assigned < n) {
    bool moved = false;
    for (auto h : order) {
      if (assigned == n) break;
      if (out[h] < hi[h]) {
        ++out[h];
        ++assigned;
        moved = true;
      }
    }
    if (!moved) throw AllocationError("allocation cannot reach n within stratum bounds");
  }
  while (assigned > n) {
    bool moved = false;
    for (auto it = order.rbegin(); it != order.rend() && assigned > n; ++it) {
      if (out[*it] > lo[*it]) {
        --out[*it];
        --assigned;
        moved = true;
      }
    }
    if (!moved) throw AllocationError("allocation cannot shrink to n within stratum bounds");
  }
  return out;
}

std::vector<std::vector<Index>> stratum_members(const FinitePopulation& pop) {
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(pop.stratum_count()));
  for (Index i = 0; i < pop.size(); ++i) {
    members[static_cast<std::size_t>(pop.strata()[static_cast<std::size_t>(i)] - 1)].push_back(i);
  }
  return members;
}

// Partial Fisher-Yates: first n entries of pool become a uniform n-subset.
void select_without_replacement(std::vector<Index>& pool, Index n, Stream& rng) {
  const std::size_t size = pool.size();
  for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
    const std::size_t j = k + rng.index(size - k);
    std::swap(pool[k], pool[j]);
  }
}

}  // namespace

DrawnSample make_sample(std::vector<Index> indices, Vector pi) {
  if (static_cast<Index>(indices.size()) != pi.size()) {
    throw InputError("sampling", "indices and inclusion probabilities differ in length");
  }
  for (Index k = 0; k < pi.size(); ++k) {
    if (!(pi[k] > 0.0 && pi[k] <= 1.0)) {
      throw InputError("sampling", "inclusion probability outside (0, 1]");
    }
  }
  DrawnSample s;
  s.indices = std::move(indices);
  s.weights = pi.cwiseInverse();
  s.pi = std::move(pi);
  return s;
}

std::vector<Index> proportional_allocation(std::span<const Index> stratum_sizes, Index n) {
  const auto H = static_cast<Index>(stratum_sizes.size());
  if (H == 0) throw AllocationError("no strata to allocate");
  if (std::any_of(stratum_sizes.begin(), stratum_sizes.end(), [](Index s) { return s < 1; })) {
    throw AllocationError("every stratum needs N_h >= 1");
  }
  const Index N = std::accumulate(stratum_sizes.begin(), stratum_sizes.end(), Index{0});
  if (n < H) {
    throw AllocationError("n = " + std::to_string(n) + " cannot give each of " + std::to_string(H) +
                          " strata one unit");
  }
  if (n > N) throw AllocationError("n exceeds the population size");
  std::vector<double> quotas(static_cast<std::size_t>(H));
  for (Index h = 0; h < H; ++h) {
    quotas[static_cast<std::size_t>(h)] =
        static_cast<double>(n) * static_cast<double>(stratum_sizes[static_cast<std::size_t>(h)]) /
        static_cast<double>(N);
  }
  std::vector<Index> lo(static_cast<std::size_t>(H), 1);
  std::vector<Index> hi(stratum_sizes.begin(), stratum_sizes.end());
  return largest_remainder(quotas, n, lo, hi);
}

std::vector<Index> optimal_allocation(std::span<const Index> stratum_sizes,
                                      std::span<const double> stratum_sds, Index n) {
  const std::size_t H = stratum_sizes.size();
  if (H == 0 || stratum_sds.size() != H) throw AllocationError("stratum sizes and sds must align");
  if (std::any_of(stratum_sds.begin(), stratum_sds.end(),
                  [](double s) { return !(s >= 0.0) || !std::isfinite(s); })) {
    throw AllocationError("stratum standard deviations must be finite and >= 0");
  }
  if (std::all_of(stratum_sds.begin(), stratum_sds.end(), [](double s) { return s == 0.0; })) {
    throw AllocationError("all stratum standard deviations are zero");
  }
  std::vector<Index> lo(H), hi(H);
  for (std::size_t h = 0; h < H; ++h) {
    if (stratum_sizes[h] < 1) throw AllocationError("every stratum needs N_h >= 1");
    hi[h] = stratum_sizes[h];
    lo[h] = std::min<Index>(2, stratum_sizes[h]);
  }
  if (n < std::accumulate(lo.begin(), lo.end(), Index{0}) ||
      n > std::accumulate(hi.begin(), hi.end(), Index{0})) {
    throw AllocationError("n = " + std::to_string(n) + " is infeasible under the [2, N_h] bounds");
  }

  std::vector<double> mass(H);
  for (std::size_t h = 0; h < H; ++h) mass[h] = static_cast<double>(stratum_sizes[h]) * stratum_sds[h];

  // Bound-constrained Neyman: pin violators at their bound and spread the
  // rest proportionally to N_h S_h until every quota is feasible.
  std::vector<double> quotas(H, 0.0);
  std::vector<char> pinned(H, 0);
  for (std::size_t iter = 0; iter <= H; ++iter) {
    double free_n = static_cast<double>(n);
    double free_mass = 0.0;
    double free_size = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      if (pinned[h]) {
        free_n -= quotas[h];
      } else {
        free_mass += mass[h];
        free_size += static_cast<double>(stratum_sizes[h]);
      }
    }
    for (std::size_t h = 0; h < H; ++h) {
      if (pinned[h]) continue;
      quotas[h] = free_mass > 0.0 ? free_n * mass[h] / free_mass
                                  : free_n * static_cast<double>(stratum_sizes[h]) / free_size;
    }
    bool changed = false;
    for (std::size_t h = 0; h < H; ++h) {
      if (!pinned[h] && quotas[h] < static_cast<double>(lo[h])) {
        quotas[h] = static_cast<double>(lo[h]);
        pinned[h] = 1;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t h = 0; h < H; ++h) {
        if (!pinned[h] && quotas[h] > static_cast<double>(hi[h])) {
          quotas[h] = static_cast<double>(hi[h]);
          pinned[h] = 1;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return largest_remainder(quotas, n, lo, hi);
}

std::vector<Index> allocate(const StratifiedSrs& design, const FinitePopulation& pop) {
  if (!pop.has_strata()) throw DesignError("stratified design requires stratum labels");
  const auto sizes = pop.stratum_sizes();
  if (std::holds_alternative<ProportionalAllocation>(design.allocation)) {
    return proportional_allocation(sizes, design.n);
  }
  const Index column = std::get<OptimalAllocation>(design.allocation).aux_column;
  if (column < 0 || column >= pop.columns()) throw DesignError("optimal allocation column out of range");
  const auto members = stratum_members(pop);
  std::vector<double> sds(members.size(), 0.0);
  for (std::size_t h = 0; h < members.size(); ++h) {
    const auto& m = members[h];
    if (m.size() < 2) continue;
    double mean = 0.0;
    for (Index i : m) mean += pop.x()(i, column);
    mean /= static_cast<double>(m.size());
    double ss = 0.0;
    for (Index i : m) ss += (pop.x()(i, column) - mean) * (pop.x()(i, column) - mean);
    sds[h] = std::sqrt(ss / static_cast<double>(m.size() - 1));
  }
  return optimal_allocation(sizes, sds, design.n);
}

DrawnSample draw(const SamplingDesign& design, const FinitePopulation& pop, Stream& rng) {
  const Index N = pop.size();
  if (const auto* srs = std::get_if<Srswor>(&design)) {
    if (srs->n < 1 || srs->n > N) {
      throw DesignError("SRSWOR sample size " + std::to_string(srs->n) + " outside [1, " +
                        std::to_string(N) + "]");
    }
    std::vector<Index> pool(static_cast<std::size_t>(N));
    std::iota(pool.begin(), pool.end(), Index{0});
    select_without_replacement(pool, srs->n, rng);
    pool.resize(static_cast<std::size_t>(srs->n));
    std::sort(pool.begin(), pool.end());
    const double pi = static_cast<double>(srs->n) / static_cast<double>(N);
    return make_sample(std::move(pool), Vector::Constant(srs->n, pi));
  }

  const auto& strat = std::get<StratifiedSrs>(design);
  if (strat.n < 1 || strat.n > N) throw DesignError("stratified sample size outside [1, N]");
  const auto n_h = allocate(strat, pop);
  const auto members = stratum_members(pop);
  std::vector<std::pair<Index, double>> chosen;
  chosen.reserve(static_cast<std::size_t>(strat.n));
  for (std::size_t h = 0; h < members.size(); ++h) {
    const auto N_h = static_cast<Index>(members[h].size());
    if (n_h[h] < 1 || n_h[h] > N_h) throw DesignError("stratum allocation outside [1, N_h]");
    std::vector<Index> pool = members[h];
    select_without_replacement(pool, n_h[h], rng);
    const double pi = static_cast<double>(n_h[h]) / static_cast<double>(N_h);
    for (Index k = 0; k < n_h[h]; ++k) chosen.emplace_back(pool[static_cast<std::size_t>(k)], pi);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Index> indices(chosen.size());
  Vector pi(static_cast<Index>(chosen.size()));
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    indices[k] = chosen[k].first;
    pi[static_cast<Index>(k)] = chosen[k].second;
  }
  return make_sample(std::move(indices), std::move(pi));
}

double binomial_coefficient(Index N, Index n) {
  if (n < 0 || n > N) return 0.0;
  n = std::min(n, N - n);
  double c = 1.0;
  for (Index k = 1; k <= n; ++k) c = c * static_cast<double>(N - n + k) / static_cast<double>(k);
  return std::round(c);
}

SrsworEnumeration enumerate_srswor(Index N, Index n) {
  if (N < 1 || n < 1 || n > N) throw SizeError("enumeration needs 1 <= n <= N");
  const double count = binomial_coefficient(N, n);
  if (count > kMaxEnumeratedSubsets) {
    throw SizeError("C(" + std::to_string(N) + "," + std::to_string(n) +
                    ") subsets exceed the enumeration limit");
  }
  SrsworEnumeration out;
  out.N = N;
  out.n = n;
  out.probability = 1.0 / count;
  out.joint_inclusion = N > 1 ? static_cast<double>(n * (n - 1)) / static_cast<double>(N * (N - 1)) : 0.0;
  out.subsets.reserve(static_cast<std::size_t>(count));
  std::vector<Index> current(static_cast<std::size_t>(n));
  std::iota(current.begin(), current.end(), Index{0});
  while (true) {
    out.subsets.push_back(current);
    Index k = n - 1;
    while (k >= 0 && current[static_cast<std::size_t>(k)] == N - n + k) --k;
    if (k < 0) break;
    ++current[static_cast<std::size_t>(k)];
    for (Index j = k + 1; j < n; ++j) {
      current[static_cast<std::size_t>(j)] = current[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

DrawnSample SrsworEnumeration::sample(std::size_t k) const {
  const double pi = static_cast<double>(n) / static_cast<double>(N);
  return make_sample(subsets.at(k), Vector::Constant(n, pi));
}

double srswor_expectation(const SrsworEnumeration& design,
                          const std::function<double(const DrawnSample&)>& statistic) {
  double total = 0.0;
  for (std::size_t k = 0; k < design.subsets.size(); ++k) {
    total += design.probability * statistic(design.sample(k));
  }
  return total;
}

}  // namespace svy
