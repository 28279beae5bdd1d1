#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace xgnn {

/// Dense row-major real matrix. Node states, weights and gradients all use it.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = std::int64_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: inconsistent config, invalid arguments, malformed graphs.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent dataset/mask files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A primitive produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace xgnn
