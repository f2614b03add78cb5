#pragma once

#include <Eigen/Dense>

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace opinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A point in the parameter domain.
using Parameter = std::vector<double>;

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter outside the admissible set of some theta function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Incompatible matrix/vector shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A full- or reduced-order solver failed (singular operator, no convergence).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A factorization or basis construction found insufficient rank.
class RankError : public Error {
 public:
  using Error::Error;
};

/// A dense-size guard was exceeded.
class GuardError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

inline std::string format_parameter(const Parameter& mu) {
  std::string out = "(";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (i) out += ", ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", mu[i]);
    out += buf;
  }
  return out + ")";
}

}  // namespace opinf
