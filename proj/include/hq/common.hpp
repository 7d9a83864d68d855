#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hq {

/// Dense row-major matrix used for features, scores and probabilities.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Class labels, always contiguous in {0..c-1}.
using Labels = std::vector<int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (file format, dimensions, non-finite values).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or violated operation precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A fit-phase operation was handed data derived from a test split.
class TaintError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

/// Index of the largest entry of each row; ties go to the lowest column.
Labels row_argmax(const Matrix& m);

double accuracy(const Labels& pred, const Labels& truth);

}  // namespace hq
