// svyma: generate populations, run Monte Carlo scenarios, pivot reports.
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "svy/error.hpp"
#include "svy/io.hpp"
#include "svy/report.hpp"
#include "svy/scenario.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError {
  std::string message;
};

void require_input(const std::string& flag, const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError{flag + ": file '" + path + "' does not exist"};
  }
}

void require_output(const std::string& flag, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw UsageError{flag + ": directory '" + parent.string() + "' for '" + path + "' does not exist"};
  }
}

std::string log_to_csv(const svy::McReport& report) {
  std::ostringstream out;
  out << "method,d_noise,replicate,estimate,failed\n";
  for (const auto& e : report.log) {
    out << e.method << ',' << e.d_noise << ',' << e.replicate << ','
        << (e.failed ? std::string() : svy::io::format_double(e.estimate)) << ',' << (e.failed ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-based model-assisted estimation experiments"};
  app.require_subcommand(1);

  std::string params, scenario_path, in, out, log_path, pivot_name = "by_dnoise";
  std::optional<std::uint64_t> seed;
  int threads = 0;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic population CSV");
  gen->add_option("--params", params, "JSON with 'population' and optional 'model' objects")->required();
  gen->add_option("--out", out, "Output population CSV")->required();
  gen->add_option("--seed", seed, "Seed for the generator and the survey variable");

  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo scenario");
  sim->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  sim->add_option("--out", out, "Output report CSV")->required();
  sim->add_option("--seed", seed, "Master seed (overrides the scenario)");
  sim->add_option("--threads", threads, "Replicate worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  sim->add_option("--log", log_path, "Optional per-replicate estimate CSV");

  auto* rep = app.add_subcommand("report", "Pivot a report into a plot-ready RE table");
  rep->add_option("--in", in, "Report CSV")->required();
  rep->add_option("--pivot", pivot_name, "by_dnoise or by_method")
      ->check(CLI::IsMember({"by_dnoise", "by_method"}));
  rep->add_option("--out", out, "Output table CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*gen) {
      require_input("--params", params);
      require_output("--out", out);
      std::vector<std::string> warnings;
      const auto pop = svy::generate_from_params(svy::io::read_file(params), params, seed, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      svy::save_population(pop, out);
    } else if (*sim) {
      require_input("--scenario", scenario_path);
      require_output("--out", out);
      if (!log_path.empty()) require_output("--log", log_path);
      auto scenario = svy::load_scenario(scenario_path);
      if (seed) scenario.master_seed = *seed;
      if (sim->count("--threads") > 0) scenario.threads = threads;
      scenario.log_estimates = !log_path.empty();
      const auto report = svy::run_scenario(scenario);
      for (const auto& [key, count] : report.failures) {
        std::cerr << "warning: " << key << " failed in " << count << " replicates\n";
      }
      svy::write_report(report, out);
      if (!log_path.empty()) svy::io::write_file_atomic(log_path, log_to_csv(report));
    } else if (*rep) {
      require_input("--in", in);
      if (!out.empty()) require_output("--out", out);
      const auto table = svy::pivot_report(svy::read_report(in), svy::parse_pivot(pivot_name));
      if (out.empty()) {
        std::cout << table;
      } else {
        svy::io::write_file_atomic(out, table);
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.message << '\n' << app.help();
    return kUsage;
  } catch (const svy::Error& e) {
    std::cerr << e.module() << ": " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << '\n';
    return kRuntime;
  }
  return 0;
}
