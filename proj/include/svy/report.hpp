#pragma once

#include <string>

#include "svy/montecarlo.hpp"

namespace svy {

inline constexpr const char* kReportHeader = "method,d_noise,rb_percent,re_percent,mse,r,seed";

std::string report_to_csv(const McReport& report);
McReport report_from_csv(const std::string& text, const std::string& origin = "<memory>");

void write_report(const McReport& report, const std::string& path);
McReport read_report(const std::string& path);

enum class Pivot { ByDnoise, ByMethod };
Pivot parse_pivot(const std::string& name);

// by_dnoise: one row per method, one RE column per level.
// by_method: one row per level, one RE column per method.
std::string pivot_report(const McReport& report, Pivot pivot);

}  // namespace svy
