#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svy/montecarlo.hpp"

namespace svy {

// Scenario files are JSON objects; see README.md for the keys. Column
// indices in the file are 1-based (1 means X1).
McScenario parse_scenario(const std::string& text, const std::string& origin = "<memory>");
McScenario load_scenario(const std::string& path);

// Generator parameters for the `generate` command: the "population" and
// "model" objects of a scenario file. A seed, when given, replaces both the
// generator and the model seed.
FinitePopulation generate_from_params(const std::string& text, const std::string& origin,
                                      std::optional<std::uint64_t> seed = {},
                                      std::vector<std::string>* warnings = nullptr);

}  // namespace svy
