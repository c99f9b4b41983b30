#pragma once

#include <stdexcept>
#include <string>

namespace wclt {

/// Invalid arguments or malformed inputs (exit code 1 at the CLI).
struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure failed beyond tolerance (solver breakdown etc.).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// An empirical hypothesis or diagnostic check failed hard enough to abort
/// a pipeline stage (exit code 2 at the CLI).
struct CheckFailure : std::runtime_error {
  CheckFailure(std::string check, const std::string& what)
      : std::runtime_error(what), check_name(std::move(check)) {}
  std::string check_name;
};

}  // namespace wclt
