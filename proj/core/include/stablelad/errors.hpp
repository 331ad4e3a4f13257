#pragma once

#include <stdexcept>
#include <string>

namespace stablelad {

/// Invalid configuration, parameters out of domain, malformed input files.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Estimation could not be completed (degenerate data, singular matrices,
/// solver breakdown).
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown while generating data (path explosion, step underflow).
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / stream failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stablelad
