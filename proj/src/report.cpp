#include "svy/report.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>

#include "svy/error.hpp"
#include "svy/io.hpp"

namespace svy {

namespace {

constexpr const char* kModule = "report";

template <typename T>
bool parse_integer(const std::string& cell, T& out) {
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void bad_cell(const std::string& origin, std::size_t line, const std::string& column,
                           const std::string& cell) {
  throw InputError(kModule, origin + ":" + std::to_string(line) + ": bad value '" + cell + "' in column " + column);
}

}  // namespace

std::string report_to_csv(const McReport& report) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& row : report.rows) {
    out << row.method << ',' << row.d_noise << ',' << io::format_double(row.rb_percent) << ','
        << io::format_double(row.re_percent) << ',' << io::format_double(row.mse) << ',' << row.r << ','
        << row.seed << '\n';
  }
  return out.str();
}

McReport report_from_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError(kModule, origin + ": empty report, header missing");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) {
    throw InputError(kModule, origin + ": unexpected header '" + line + "'");
  }
  McReport report;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line == "\r") continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 7) {
      throw InputError(kModule, origin + ":" + std::to_string(number) + ": expected 7 fields, found " +
                                    std::to_string(cells.size()));
    }
    McRow row;
    row.method = cells[0];
    if (!parse_integer(cells[1], row.d_noise)) bad_cell(origin, number, "d_noise", cells[1]);
    if (!io::parse_double(cells[2], row.rb_percent)) bad_cell(origin, number, "rb_percent", cells[2]);
    if (!io::parse_double(cells[3], row.re_percent)) bad_cell(origin, number, "re_percent", cells[3]);
    if (!io::parse_double(cells[4], row.mse)) bad_cell(origin, number, "mse", cells[4]);
    if (!parse_integer(cells[5], row.r)) bad_cell(origin, number, "r", cells[5]);
    if (!parse_integer(cells[6], row.seed)) bad_cell(origin, number, "seed", cells[6]);
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_report(const McReport& report, const std::string& path) {
  io::write_file_atomic(path, report_to_csv(report));
}

McReport read_report(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError(kModule, "report file '" + path + "' does not exist");
  return report_from_csv(io::read_file(path), path);
}

Pivot parse_pivot(const std::string& name) {
  if (name == "by_dnoise") return Pivot::ByDnoise;
  if (name == "by_method") return Pivot::ByMethod;
  throw ParameterError(kModule, "unknown pivot '" + name + "' (expected by_dnoise or by_method)");
}

std::string pivot_report(const McReport& report, Pivot pivot) {
  std::vector<std::string> methods;
  std::vector<Index> levels;
  std::map<std::pair<std::string, Index>, double> re;
  for (const auto& row : report.rows) {
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) methods.push_back(row.method);
    if (std::find(levels.begin(), levels.end(), row.d_noise) == levels.end()) levels.push_back(row.d_noise);
    re[{row.method, row.d_noise}] = row.re_percent;
  }
  std::sort(methods.begin(), methods.end());
  std::sort(levels.begin(), levels.end());

  auto cell = [&](const std::string& m, Index d) {
    const auto it = re.find({m, d});
    return it == re.end() ? std::string() : io::format_double(it->second);
  };

  std::ostringstream out;
  if (pivot == Pivot::ByDnoise) {
    out << "method";
    for (Index d : levels) out << ",re_d" << d;
    out << '\n';
    for (const auto& m : methods) {
      out << m;
      for (Index d : levels) out << ',' << cell(m, d);
      out << '\n';
    }
  } else {
    out << "d_noise";
    for (const auto& m : methods) out << ",re_" << m;
    out << '\n';
    for (Index d : levels) {
      out << d;
      for (const auto& m : methods) out << ',' << cell(m, d);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace svy
