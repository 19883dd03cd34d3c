#include "svy/scenario.hpp"

#include <filesystem>
#include <initializer_list>
#include <set>

#include "json.hpp"
#include "svy/error.hpp"
#include "svy/io.hpp"

namespace svy {

namespace {

using nlohmann::json;
constexpr const char* kModule = "scenario";

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw InputError(kModule, origin_ + ": " + where + ": " + what);
  }

  void only(const json& obj, const std::string& where, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(where, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : obj.items()) {
      if (!allowed.count(item.key())) fail(where, "unknown key '" + item.key() + "'");
    }
  }

  template <typename T>
  T get(const json& obj, const char* key, const std::string& where, T fallback) const {
    if (!obj.contains(key)) return fallback;
    return as<T>(obj.at(key), where + "." + key);
  }

  template <typename T>
  T require(const json& obj, const char* key, const std::string& where) const {
    if (!obj.contains(key)) fail(where, std::string("missing key '") + key + "'");
    return as<T>(obj.at(key), where + "." + key);
  }

  template <typename T>
  T as(const json& v, const std::string& where) const {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(where, "expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(where, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
            fail(where, "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(where, "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(where, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(where, e.what());
    }
  }

  // 1-based column list in the file, 0-based in memory.
  std::vector<Index> columns(const json& v, const std::string& where) const {
    if (!v.is_array()) fail(where, "expected an array of column numbers");
    std::vector<Index> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(column(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

  Index column(const json& v, const std::string& where) const {
    const auto c = as<std::int64_t>(v, where);
    if (c < 1) fail(where, "column numbers start at 1");
    return static_cast<Index>(c - 1);
  }

 private:
  std::string origin_;
};

StrataSpec read_strata(const Reader& rd, const json& obj) {
  const std::string where = "population.strata";
  rd.only(obj, where, {"column", "count", "fractions"});
  StrataSpec s;
  s.column = rd.column(obj.contains("column") ? obj.at("column") : json(1), where + ".column");
  s.count = rd.require<int>(obj, "count", where);
  s.fractions = rd.get<std::vector<double>>(obj, "fractions", where, {});
  return s;
}

AuxiliaryParams read_generator(const Reader& rd, const json& obj) {
  const std::string where = "population.generator";
  rd.only(obj, where, {"N", "p", "rho", "seed", "location", "scale"});
  AuxiliaryParams a;
  a.N = rd.get<Index>(obj, "N", where, a.N);
  a.p = rd.get<Index>(obj, "p", where, a.p);
  a.rho = rd.get<double>(obj, "rho", where, a.rho);
  a.seed = rd.get<std::uint64_t>(obj, "seed", where, a.seed);
  a.location = rd.get<double>(obj, "location", where, a.location);
  a.scale = rd.get<double>(obj, "scale", where, a.scale);
  return a;
}

FileSource read_file_source(const Reader& rd, const json& obj) {
  const std::string where = "population.file";
  rd.only(obj, where, {"path", "id_column", "y_column", "strata_column", "x_columns"});
  FileSource f;
  f.path = rd.require<std::string>(obj, "path", where);
  f.schema.id_column = rd.get<std::string>(obj, "id_column", where, "");
  f.schema.y_column = rd.get<std::string>(obj, "y_column", where, "");
  f.schema.strata_column = rd.get<std::string>(obj, "strata_column", where, "");
  f.schema.x_columns = rd.get<std::vector<std::string>>(obj, "x_columns", where, {});
  return f;
}

PopulationSource read_population(const Reader& rd, const json& obj) {
  rd.only(obj, "population", {"generator", "file", "strata"});
  if (obj.contains("generator") == obj.contains("file")) {
    rd.fail("population", "give exactly one of 'generator' or 'file'");
  }
  std::optional<StrataSpec> strata;
  if (obj.contains("strata")) strata = read_strata(rd, obj.at("strata"));
  if (obj.contains("generator")) return GeneratorSource{read_generator(rd, obj.at("generator")), strata};
  FileSource f = read_file_source(rd, obj.at("file"));
  f.strata = strata;
  return f;
}

DgpModel read_model(const Reader& rd, const json& obj) {
  rd.only(obj, "model", {"variant", "noise_scale", "seed"});
  DgpModel m;
  try {
    m.variant = parse_variant(rd.require<std::string>(obj, "variant", "model"));
  } catch (const ParameterError& e) {
    rd.fail("model.variant", e.what());
  }
  if (obj.contains("noise_scale")) m.noise_scale = rd.as<double>(obj.at("noise_scale"), "model.noise_scale");
  m.seed = rd.get<std::uint64_t>(obj, "seed", "model", m.seed);
  return m;
}

SamplingDesign read_design(const Reader& rd, const json& obj) {
  rd.only(obj, "design", {"type", "n", "allocation", "aux_column"});
  const auto type = rd.require<std::string>(obj, "type", "design");
  const auto n = rd.require<Index>(obj, "n", "design");
  if (type == "srswor") {
    if (obj.contains("allocation") || obj.contains("aux_column")) {
      rd.fail("design", "'allocation' applies to stratified designs only");
    }
    return Srswor{n};
  }
  if (type != "stratified") rd.fail("design.type", "expected 'srswor' or 'stratified', got '" + type + "'");
  const auto allocation = rd.get<std::string>(obj, "allocation", "design", "proportional");
  if (allocation == "proportional") {
    if (obj.contains("aux_column")) rd.fail("design", "'aux_column' applies to optimal allocation only");
    return StratifiedSrs{ProportionalAllocation{}, n};
  }
  if (allocation == "optimal" || allocation == "neyman") {
    const Index col = rd.column(obj.contains("aux_column") ? obj.at("aux_column") : json(1), "design.aux_column");
    return StratifiedSrs{OptimalAllocation{col}, n};
  }
  rd.fail("design.allocation", "expected 'proportional' or 'optimal', got '" + allocation + "'");
}

MethodSpec read_method(const Reader& rd, const json& obj, std::size_t index) {
  const std::string where = "roster[" + std::to_string(index) + "]";
  if (!obj.is_object()) rd.fail(where, "expected an object");
  MethodKind kind;
  try {
    kind = parse_method_kind(rd.require<std::string>(obj, "method", where));
  } catch (const ParameterError& e) {
    rd.fail(where + ".method", e.what());
  }
  MethodSpec m = make_method(kind, rd.get<std::string>(obj, "label", where, ""));
  switch (kind) {
    case MethodKind::Ht:
    case MethodKind::Greg:
      rd.only(obj, where, {"method", "label"});
      break;
    case MethodKind::Ridge:
    case MethodKind::Lasso:
    case MethodKind::ElasticNet: {
      rd.only(obj, where,
              {"method", "label", "folds", "n_lambda", "lambda_min_ratio", "lambdas", "alphas", "tol", "max_iter",
               "weighted_loss", "standardize"});
      auto& cv = m.cv;
      cv.folds = rd.get<int>(obj, "folds", where, cv.folds);
      cv.n_lambda = rd.get<int>(obj, "n_lambda", where, cv.n_lambda);
      cv.lambda_min_ratio = rd.get<double>(obj, "lambda_min_ratio", where, cv.lambda_min_ratio);
      cv.lambdas = rd.get<std::vector<double>>(obj, "lambdas", where, cv.lambdas);
      if (obj.contains("alphas")) {
        if (kind != MethodKind::ElasticNet) rd.fail(where, "'alphas' applies to method 'en' only");
        cv.alphas = rd.as<std::vector<double>>(obj.at("alphas"), where + ".alphas");
      }
      cv.cd.tol = rd.get<double>(obj, "tol", where, cv.cd.tol);
      cv.cd.max_iter = rd.get<int>(obj, "max_iter", where, cv.cd.max_iter);
      cv.weighted_loss = rd.get<bool>(obj, "weighted_loss", where, cv.weighted_loss);
      cv.fit.standardize = rd.get<bool>(obj, "standardize", where, cv.fit.standardize);
      break;
    }
    case MethodKind::Cart:
    case MethodKind::Forest: {
      if (kind == MethodKind::Cart) {
        rd.only(obj, where, {"method", "label", "n0", "n0_exponent"});
      } else {
        rd.only(obj, where,
                {"method", "label", "trees", "n0", "n0_exponent", "p0", "forced_features", "bootstrap",
                 "pi_weighted_bootstrap"});
      }
      if (obj.contains("n0") && obj.contains("n0_exponent")) rd.fail(where, "give 'n0' or 'n0_exponent', not both");
      m.forest.n0 = rd.get<Index>(obj, "n0", where, m.forest.n0);
      if (obj.contains("n0_exponent")) m.n0_exponent = rd.as<double>(obj.at("n0_exponent"), where + ".n0_exponent");
      m.forest.trees = rd.get<int>(obj, "trees", where, m.forest.trees);
      if (obj.contains("p0")) {
        const auto& p0 = obj.at("p0");
        if (p0.is_string()) {
          const auto s = p0.get<std::string>();
          if (s == "sqrt") {
            m.p0_mode = 0;
          } else if (s == "all") {
            m.p0_mode = -1;
          } else {
            rd.fail(where + ".p0", "expected 'sqrt', 'all' or a positive integer");
          }
        } else {
          m.p0_mode = rd.as<Index>(p0, where + ".p0");
          if (m.p0_mode < 1) rd.fail(where + ".p0", "expected 'sqrt', 'all' or a positive integer");
        }
      }
      if (obj.contains("forced_features")) {
        m.forest.forced_features = rd.columns(obj.at("forced_features"), where + ".forced_features");
      }
      m.forest.bootstrap = rd.get<bool>(obj, "bootstrap", where, m.forest.bootstrap);
      m.forest.pi_weighted_bootstrap =
          rd.get<bool>(obj, "pi_weighted_bootstrap", where, m.forest.pi_weighted_bootstrap);
      break;
    }
    case MethodKind::Knn:
      rd.only(obj, where, {"method", "label", "k", "weighted"});
      m.k = rd.get<Index>(obj, "k", where, m.k);
      m.knn_pi_weighted = rd.get<bool>(obj, "weighted", where, m.knn_pi_weighted);
      break;
    case MethodKind::Pcr: {
      rd.only(obj, where, {"method", "label", "rule", "components"});
      const auto rule = rd.get<std::string>(obj, "rule", where, "fixed");
      if (rule == "fixed") {
        m.pcr.rule = PcrRule::Fixed;
      } else if (rule == "p14") {
        m.pcr.rule = PcrRule::P14;
      } else if (rule == "p24") {
        m.pcr.rule = PcrRule::P24;
      } else if (rule == "p34") {
        m.pcr.rule = PcrRule::P34;
      } else {
        rd.fail(where + ".rule", "expected fixed, p14, p24 or p34");
      }
      if (obj.contains("components") && m.pcr.rule != PcrRule::Fixed) {
        rd.fail(where, "'components' applies to rule 'fixed' only");
      }
      m.pcr.components = rd.get<Index>(obj, "components", where, m.pcr.components);
      break;
    }
    case MethodKind::Custom:
      break;
  }
  return m;
}

}  // namespace

McScenario parse_scenario(const std::string& text, const std::string& origin) {
  const Reader rd(origin);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(kModule, origin + ": " + e.what());
  }
  rd.only(doc, "scenario",
          {"population", "model", "design", "replicates", "roster", "d_noise", "structural", "master_seed",
           "threads", "log_estimates", "max_failure_rate"});
  McScenario s;
  if (doc.contains("population")) s.population = read_population(rd, doc.at("population"));
  if (doc.contains("model")) s.model = read_model(rd, doc.at("model"));
  if (doc.contains("design")) s.design = read_design(rd, doc.at("design"));
  s.replicates = rd.get<int>(doc, "replicates", "scenario", s.replicates);
  if (s.replicates < 1) rd.fail("scenario.replicates", "must be >= 1");
  if (!doc.contains("roster")) rd.fail("scenario", "missing key 'roster'");
  const auto& roster = doc.at("roster");
  if (!roster.is_array() || roster.empty()) rd.fail("scenario.roster", "expected a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    s.roster.push_back(read_method(rd, roster[i], i));
    if (!labels.insert(s.roster.back().label).second) {
      rd.fail("scenario.roster", "duplicate label '" + s.roster.back().label + "'");
    }
  }
  if (doc.contains("d_noise")) {
    s.d_noise_levels = rd.as<std::vector<Index>>(doc.at("d_noise"), "scenario.d_noise");
    if (s.d_noise_levels.empty()) rd.fail("scenario.d_noise", "expected at least one level");
    for (std::size_t i = 1; i < s.d_noise_levels.size(); ++i) {
      if (s.d_noise_levels[i] <= s.d_noise_levels[i - 1]) rd.fail("scenario.d_noise", "levels must be ascending");
    }
    if (s.d_noise_levels.front() < 0) rd.fail("scenario.d_noise", "levels must be >= 0");
  }
  if (doc.contains("structural")) s.structural = rd.columns(doc.at("structural"), "scenario.structural");
  if (!s.model && s.structural.empty()) {
    rd.fail("scenario", "'structural' is required when no model is given");
  }
  s.master_seed = rd.get<std::uint64_t>(doc, "master_seed", "scenario", s.master_seed);
  s.threads = rd.get<int>(doc, "threads", "scenario", s.threads);
  s.log_estimates = rd.get<bool>(doc, "log_estimates", "scenario", s.log_estimates);
  s.max_failure_rate = rd.get<double>(doc, "max_failure_rate", "scenario", s.max_failure_rate);
  return s;
}

McScenario load_scenario(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError(kModule, "scenario file '" + path + "' does not exist");
  McScenario s = parse_scenario(io::read_file(path), path);
  // Population files are resolved relative to the scenario file.
  if (auto* file = std::get_if<FileSource>(&s.population)) {
    const std::filesystem::path p(file->path);
    if (p.is_relative()) file->path = (std::filesystem::path(path).parent_path() / p).string();
  }
  return s;
}

FinitePopulation generate_from_params(const std::string& text, const std::string& origin,
                                      std::optional<std::uint64_t> seed, std::vector<std::string>* warnings) {
  const Reader rd(origin);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(kModule, origin + ": " + e.what());
  }
  rd.only(doc, "params", {"population", "model"});
  McScenario s;
  if (doc.contains("population")) s.population = read_population(rd, doc.at("population"));
  if (!std::holds_alternative<GeneratorSource>(s.population)) {
    rd.fail("params.population", "the generate command needs a 'generator' source");
  }
  auto& gen = std::get<GeneratorSource>(s.population);
  if (seed) gen.aux.seed = *seed;
  FinitePopulation pop = generate_auxiliary(gen.aux);
  if (gen.strata) pop = stratify_by_column(pop, gen.strata->column, gen.strata->count, gen.strata->fractions);
  if (doc.contains("model")) {
    DgpModel model = read_model(rd, doc.at("model"));
    if (seed) model.seed = *seed;
    pop = generate_survey_variable(pop, model, warnings);
  }
  return pop;
}

}  // namespace svy
