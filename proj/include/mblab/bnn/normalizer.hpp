#pragma once

#include <Eigen/Core>

#include "mblab/core/types.hpp"

namespace mblab::bnn {

// Per-column z-scoring of model inputs and targets.
struct Normalizer {
  Eigen::RowVectorXd x_mean;
  Eigen::RowVectorXd x_std;
  Eigen::RowVectorXd y_mean;
  Eigen::RowVectorXd y_std;

  // Columns with std below 1e-8 keep a unit scale.
  static Normalizer fit(const SupervisedSet& data);
  static Normalizer identity(std::size_t x_dim = kInputDim, std::size_t y_dim = kEncodedDim);

  RowMatrix x_to_norm(const RowMatrix& x) const;
  RowMatrix x_to_raw(const RowMatrix& x) const;
  RowMatrix y_to_norm(const RowMatrix& y) const;
  RowMatrix y_to_raw(const RowMatrix& y) const;
};

}  // namespace mblab::bnn
