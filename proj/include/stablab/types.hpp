#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace stablab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a vector or sample does not have the dimension an operation expects.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace stablab
