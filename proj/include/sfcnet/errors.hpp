#pragma once

#include <stdexcept>
#include <string>

namespace sfcnet {

// Malformed or inconsistent run configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing, unparsable or invalid input tables (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Link-count targets that no edge-probability model can reach.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Topology for which the balance system cannot have a solution.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure inside a flow solver (CLI exit code 3).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sfcnet
