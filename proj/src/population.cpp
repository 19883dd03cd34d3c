#include "svy/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "svy/error.hpp"
#include "svy/io.hpp"
#include "svy/rng.hpp"

namespace svy {

namespace {

constexpr const char* kModule = "population";

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(kModule, what);
}

double empirical_variance(const Vector& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

FinitePopulation::FinitePopulation(std::vector<std::string> ids, Matrix x, Vector y,
                                   std::vector<int> strata)
    : ids_(std::move(ids)), x_(std::move(x)), y_(std::move(y)), strata_(std::move(strata)) {
  require(x_.rows() >= 1, "population needs N >= 1");
  require(x_.cols() >= 1, "population needs p >= 1");
  if (ids_.empty()) {
    ids_.reserve(static_cast<std::size_t>(x_.rows()));
    for (Index i = 0; i < x_.rows(); ++i) ids_.push_back(std::to_string(i + 1));
  }
  require(static_cast<Index>(ids_.size()) == x_.rows(), "ids length differs from N");
  require(x_.allFinite(), "auxiliary matrix has non-finite entries");
  if (y_.size() > 0) {
    require(y_.size() == x_.rows(), "y length differs from N");
    require(y_.allFinite(), "survey variable has non-finite entries");
  }
  if (!strata_.empty()) {
    require(static_cast<Index>(strata_.size()) == x_.rows(), "strata length differs from N");
    const int h_max = *std::max_element(strata_.begin(), strata_.end());
    const int h_min = *std::min_element(strata_.begin(), strata_.end());
    require(h_min == 1, "stratum labels must start at 1");
    std::vector<char> seen(static_cast<std::size_t>(h_max), 0);
    for (int h : strata_) seen[static_cast<std::size_t>(h - 1)] = 1;
    require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }),
            "stratum labels must be contiguous 1..H with no empty stratum");
    stratum_count_ = h_max;
  }
}

std::vector<Index> FinitePopulation::stratum_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(stratum_count_), 0);
  for (int h : strata_) ++sizes[static_cast<std::size_t>(h - 1)];
  return sizes;
}

double FinitePopulation::total() const {
  require(has_y(), "population total requested but y is unset");
  return y_.sum();
}

FinitePopulation FinitePopulation::with_y(Vector y) const {
  return FinitePopulation(ids_, x_, std::move(y), strata_);
}

FinitePopulation FinitePopulation::with_strata(std::vector<int> strata) const {
  return FinitePopulation(ids_, x_, y_, std::move(strata));
}

FinitePopulation generate_auxiliary(const AuxiliaryParams& params) {
  require(params.N >= 2, "generate_auxiliary needs N >= 2");
  require(params.p >= 1, "generate_auxiliary needs p >= 1");
  require(params.rho >= 0.0 && params.rho < 1.0, "rho must lie in [0, 1)");
  require(params.scale > 0.0 && std::isfinite(params.location), "invalid location/scale");

  Stream stream(params.seed, {0x617578ULL});
  const double innovation_sd = std::sqrt(1.0 - params.rho * params.rho);
  Matrix x(params.N, params.p);
  for (Index i = 0; i < params.N; ++i) {
    double z = stream.normal(0.0, 1.0);
    x(i, 0) = z;
    for (Index j = 1; j < params.p; ++j) {
      z = params.rho * z + innovation_sd * stream.normal(0.0, 1.0);
      x(i, j) = z;
    }
  }
  x = (params.location + params.scale * x.array()).max(0.0).matrix();
  return FinitePopulation({}, std::move(x));
}

FinitePopulation generate_auxiliary(Index N, Index p, double rho, std::uint64_t seed) {
  AuxiliaryParams params;
  params.N = N;
  params.p = p;
  params.rho = rho;
  params.seed = seed;
  return generate_auxiliary(params);
}

FinitePopulation stratify_by_column(const FinitePopulation& pop, Index column, int strata,
                                    const std::vector<double>& fractions) {
  require(column >= 0 && column < pop.columns(), "stratification column out of range");
  require(strata >= 1 && strata <= pop.size(), "stratum count must lie in [1, N]");
  std::vector<double> shares = fractions;
  if (shares.empty()) shares.assign(static_cast<std::size_t>(strata), 1.0);
  require(static_cast<int>(shares.size()) == strata, "fractions length must equal stratum count");
  require(std::all_of(shares.begin(), shares.end(), [](double f) { return f > 0.0; }),
          "stratum fractions must be positive");
  const double share_total = std::accumulate(shares.begin(), shares.end(), 0.0);

  const Index N = pop.size();
  std::vector<Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), Index{0});
  const auto& x = pop.x();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return x(a, column) < x(b, column); });

  std::vector<int> labels(static_cast<std::size_t>(N));
  double cumulative = 0.0;
  Index start = 0;
  for (int h = 0; h < strata; ++h) {
    cumulative += shares[static_cast<std::size_t>(h)];
    Index stop = (h == strata - 1)
                     ? N
                     : static_cast<Index>(std::llround(cumulative / share_total * static_cast<double>(N)));
    stop = std::clamp(stop, start + 1, N - (strata - 1 - h));
    for (Index k = start; k < stop; ++k) labels[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = h + 1;
    start = stop;
  }
  return pop.with_strata(std::move(labels));
}

double default_noise_scale(DgpVariant variant) {
  switch (variant) {
    case DgpVariant::Y1:
    case DgpVariant::Y2:
      return 1500.0;
    case DgpVariant::Y3:
      return 0.1;  // Exp with rate 10
    case DgpVariant::Y4:
      return 0.01;
  }
  return 0.0;
}

std::string variant_name(DgpVariant variant) {
  switch (variant) {
    case DgpVariant::Y1:
      return "Y1";
    case DgpVariant::Y2:
      return "Y2";
    case DgpVariant::Y3:
      return "Y3";
    case DgpVariant::Y4:
      return "Y4";
  }
  return "?";
}

DgpVariant parse_variant(const std::string& name) {
  if (name == "Y1") return DgpVariant::Y1;
  if (name == "Y2") return DgpVariant::Y2;
  if (name == "Y3") return DgpVariant::Y3;
  if (name == "Y4") return DgpVariant::Y4;
  throw ParameterError(kModule, "unknown survey-variable model '" + name + "'");
}

std::vector<Index> structural_columns(DgpVariant variant) {
  switch (variant) {
    case DgpVariant::Y1:
    case DgpVariant::Y3:
      return {0, 1, 2};
    case DgpVariant::Y2:
      return {1, 3, 4};
    case DgpVariant::Y4:
      return {0, 1};
  }
  return {};
}

FinitePopulation generate_survey_variable(const FinitePopulation& pop, const DgpModel& model,
                                          std::vector<std::string>* warnings) {
  const Index N = pop.size();
  const Index p = pop.columns();
  const double noise = model.noise_scale.value_or(default_noise_scale(model.variant));
  require(noise >= 0.0 && std::isfinite(noise), "noise_scale must be a nonnegative real");
  const auto& x = pop.x();
  Stream stream(model.seed, {0x7976ULL, static_cast<std::uint64_t>(model.variant)});
  Vector y(N);

  auto normal_errors = [&](double variance) {
    Vector e(N);
    const double sd = std::sqrt(variance);
    for (Index i = 0; i < N; ++i) e[i] = sd > 0.0 ? stream.normal(0.0, sd) : 0.0;
    return e;
  };

  switch (model.variant) {
    case DgpVariant::Y1: {
      require(p >= 3, "model Y1 needs p >= 3");
      const Vector e = normal_errors(noise);
      for (Index i = 0; i < N; ++i) {
        y[i] = 400.0 + 2.0 * x(i, 0) + x(i, 1) + 2.0 * x(i, 2) + e[i];
      }
      break;
    }
    case DgpVariant::Y2: {
      require(p >= 5, "model Y2 needs p >= 5");
      const Vector e = normal_errors(noise);
      for (Index i = 0; i < N; ++i) {
        const double x2 = x(i, 1);
        const double x4 = x(i, 3);
        const double x5 = x(i, 4);
        y[i] = 500.0 + 2.0 * x4 + (x5 > 156.0 ? 400.0 : -400.0) + (x2 > 190.0 ? 1000.0 : 0.0) +
               (x5 > 200.0 ? 300.0 : 0.0) + e[i];
      }
      if (warnings != nullptr) {
        auto check = [&](Index col, double threshold, const char* label) {
          const double share =
              static_cast<double>((x.col(col).array() > threshold).count()) / static_cast<double>(N);
          if (share < 0.05 || share > 0.95) {
            std::ostringstream msg;
            msg << "Y2 indicator " << label << " has prevalence " << share
                << " outside [0.05, 0.95]; rescale the auxiliary columns";
            warnings->push_back(msg.str());
          }
        };
        check(4, 156.0, "1(X5 > 156)");
        check(1, 190.0, "1(X2 > 190)");
        check(4, 200.0, "1(X5 > 200)");
      }
      break;
    }
    case DgpVariant::Y3: {
      require(p >= 3, "model Y3 needs p >= 3");
      Vector e(N);
      for (Index i = 0; i < N; ++i) e[i] = noise > 0.0 ? stream.exponential(1.0 / noise) : 0.0;
      e.array() -= e.mean();
      for (Index i = 0; i < N; ++i) {
        const double c = std::cos(2.0 * x(i, 0) + x(i, 1) + 2.0 * x(i, 2));
        y[i] = 1.0 + c * c + e[i];
      }
      break;
    }
    case DgpVariant::Y4: {
      require(p >= 2, "model Y4 needs p >= 2");
      Vector q = (x.col(0) + x.col(1)).array().square().matrix();
      const double v = empirical_variance(q);
      require(v > 0.0, "model Y4 needs a non-constant (X1 + X2)^2");
      const Vector e = normal_errors(noise);
      y = (4.0 + 3.0 / std::sqrt(v) * q.array() + e.array()).matrix();
      break;
    }
  }
  return pop.with_y(std::move(y));
}

FinitePopulation load_population(const std::string& path, const PopulationSchema& schema) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError&) {
    throw LoadError("cannot open population file '" + path + "'", 0, 0);
  }
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("population file '" + path + "' is empty", 1, 0);
  const auto header = io::split_csv_line(line);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) position[header[c]] = c;

  auto locate = [&](const std::string& name) -> long {
    if (name.empty()) return -1;
    auto it = position.find(name);
    if (it == position.end()) {
      throw LoadError("column '" + name + "' not found in '" + path + "'", 1, 0);
    }
    return static_cast<long>(it->second);
  };
  const long id_col = locate(schema.id_column);
  const long y_col = locate(schema.y_column);
  const long strata_col = locate(schema.strata_column);
  std::vector<std::size_t> x_cols;
  if (schema.x_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      const long cl = static_cast<long>(c);
      if (cl != id_col && cl != y_col && cl != strata_col) x_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.x_columns) x_cols.push_back(static_cast<std::size_t>(locate(name)));
  }
  if (x_cols.empty()) throw LoadError("no auxiliary columns in '" + path + "'", 1, 0);

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::vector<int> strata;
  long row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty() || line == "\r") continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ": row " << row_number << " has " << cells.size() << " cells, header has "
          << header.size();
      throw LoadError(msg.str(), row_number, static_cast<long>(cells.size()));
    }
    auto numeric = [&](std::size_t c) {
      double v = 0.0;
      if (!io::parse_double(cells[c], v) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << path << ": row " << row_number << ", column '" << header[c]
            << "': not a finite number ('" << cells[c] << "')";
        throw LoadError(msg.str(), row_number, static_cast<long>(c) + 1);
      }
      return v;
    };
    std::vector<double> row;
    row.reserve(x_cols.size());
    for (auto c : x_cols) row.push_back(numeric(c));
    rows.push_back(std::move(row));
    ids.push_back(id_col >= 0 ? cells[static_cast<std::size_t>(id_col)] : std::to_string(rows.size()));
    if (y_col >= 0) ys.push_back(numeric(static_cast<std::size_t>(y_col)));
    if (strata_col >= 0) {
      const double h = numeric(static_cast<std::size_t>(strata_col));
      if (h != std::floor(h)) {
        throw LoadError(path + ": non-integer stratum label at row " + std::to_string(row_number),
                        row_number, strata_col + 1);
      }
      strata.push_back(static_cast<int>(h));
    }
  }
  if (rows.empty()) throw LoadError("population file '" + path + "' has no data rows", 2, 0);

  Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(x_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  Vector y = ys.empty() ? Vector() : Eigen::Map<Vector>(ys.data(), static_cast<Index>(ys.size()));
  try {
    return FinitePopulation(std::move(ids), std::move(x), std::move(y), std::move(strata));
  } catch (const ParameterError& e) {
    throw LoadError(path + ": " + e.what(), 0, 0);
  }
}

std::string population_to_csv(const FinitePopulation& pop) {
  std::ostringstream out;
  out << "id";
  for (Index j = 0; j < pop.columns(); ++j) out << ",x" << (j + 1);
  if (pop.has_y()) out << ",y";
  if (pop.has_strata()) out << ",stratum";
  out << '\n';
  for (Index i = 0; i < pop.size(); ++i) {
    out << pop.ids()[static_cast<std::size_t>(i)];
    for (Index j = 0; j < pop.columns(); ++j) out << ',' << io::format_double(pop.x()(i, j));
    if (pop.has_y()) out << ',' << io::format_double(pop.y()[i]);
    if (pop.has_strata()) out << ',' << pop.strata()[static_cast<std::size_t>(i)];
    out << '\n';
  }
  return out.str();
}

void save_population(const FinitePopulation& pop, const std::string& path) {
  io::write_file_atomic(path, population_to_csv(pop));
}

}  // namespace svy
