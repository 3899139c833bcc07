#include "mblab/bnn/normalizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mblab::bnn {
namespace {

void column_stats(const RowMatrix& m, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& stdev) {
  const double n = static_cast<double>(m.rows());
  mean = m.colwise().sum() / n;
  stdev = ((m.rowwise() - mean).array().square().colwise().sum() / n).sqrt();
  for (Eigen::Index j = 0; j < stdev.size(); ++j) {
    if (!(stdev[j] >= 1e-8)) stdev[j] = 1.0;
  }
}

}  // namespace

Normalizer Normalizer::fit(const SupervisedSet& data) {
  if (data.empty()) throw std::invalid_argument("Normalizer::fit: empty data");
  Normalizer n;
  column_stats(data.x, n.x_mean, n.x_std);
  column_stats(data.y, n.y_mean, n.y_std);
  return n;
}

Normalizer Normalizer::identity(std::size_t x_dim, std::size_t y_dim) {
  Normalizer n;
  n.x_mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(x_dim));
  n.x_std = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(x_dim));
  n.y_mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(y_dim));
  n.y_std = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(y_dim));
  return n;
}

RowMatrix Normalizer::x_to_norm(const RowMatrix& x) const {
  return ((x.rowwise() - x_mean).array().rowwise() / x_std.array()).matrix();
}

RowMatrix Normalizer::x_to_raw(const RowMatrix& x) const {
  return ((x.array().rowwise() * x_std.array()).rowwise() + x_mean.array()).matrix();
}

RowMatrix Normalizer::y_to_norm(const RowMatrix& y) const {
  return ((y.rowwise() - y_mean).array().rowwise() / y_std.array()).matrix();
}

RowMatrix Normalizer::y_to_raw(const RowMatrix& y) const {
  return ((y.array().rowwise() * y_std.array()).rowwise() + y_mean.array()).matrix();
}

}  // namespace mblab::bnn
