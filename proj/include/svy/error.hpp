#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace svy {

// Every failure raised by the library derives from Error and names the module
// it came from, so the CLI can print "module: cause" without guessing.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class ParameterError : public Error {
 public:
  ParameterError(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

class InputError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  LoadError(const std::string& what, long row, long column)
      : Error("population", what), row_(row), column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

class DesignError : public Error {
 public:
  explicit DesignError(const std::string& what) : Error("sampling", what) {}
};

class AllocationError : public Error {
 public:
  explicit AllocationError(const std::string& what) : Error("sampling", what) {}
};

class SizeError : public Error {
 public:
  explicit SizeError(const std::string& what) : Error("sampling", what) {}
};

class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double condition)
      : Error("estimators", what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class PredictorError : public Error {
 public:
  PredictorError(const std::string& what, long unit) : Error("estimators", what), unit_(unit) {}
  long unit() const noexcept { return unit_; }

 private:
  long unit_;
};

// Raised when coordinate descent hits max_iter; keeps the last iterate and
// the per-sweep objective values for inspection.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   std::vector<double> objective_trace)
      : Error("penalized", what),
        last_iterate_(std::move(last_iterate)),
        objective_trace_(std::move(objective_trace)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  const std::vector<double>& objective_trace() const noexcept { return objective_trace_; }

 private:
  std::vector<double> last_iterate_;
  std::vector<double> objective_trace_;
};

class IoError : public Error {
 public:
  IoError(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

}  // namespace svy
