#pragma once

// Tensor list files.
//
// A single JSON document:
//   {"format": "mblab-tensors", "version": 1, "meta": {...},
//    "tensors": [{"name": "...", "shape": [d0, d1, ...], "data": [...]}, ...]}
// `data` holds the row-major values; doubles are written with enough digits
// to round-trip exactly.

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace mblab::diffcore {

inline constexpr int kTensorFormatVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static NamedTensor from_vector(std::string name, const Eigen::VectorXd& v);
  Eigen::VectorXd to_vector() const;
};

struct TensorFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  // Throws std::out_of_range when absent.
  const NamedTensor& at(const std::string& name) const;
};

void save_tensors(const std::string& path, const TensorFile& file);
TensorFile load_tensors(const std::string& path);

}  // namespace mblab::diffcore
