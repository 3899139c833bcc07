#pragma once

// Fully connected networks over a flat parameter vector, with a hand-written
// reverse pass.
//
// Parameter layout, per layer l with fan-in n and fan-out m: the n x m weight
// matrix in row-major order followed by the m biases. A batch is a row-major
// matrix with one sample per row, so layer l computes Z = A W + b.

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mblab/core/rng.hpp"
#include "mblab/core/types.hpp"

namespace mblab::diffcore {

using Vector = Eigen::VectorXd;

enum class Activation { kIdentity, kLeakyRelu, kSwish, kTanh };

inline constexpr double kLeakySlope = 0.01;

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

class Mlp {
 public:
  // Cached activations of one forward pass.
  struct Tape {
    std::vector<RowMatrix> inputs;  // input of each layer; inputs[0] is the batch
    std::vector<RowMatrix> pre;     // pre-activation of each layer
    RowMatrix delta;                // backward scratch
    RowMatrix delta_next;
  };

  // `widths` lists input, hidden and output sizes.
  Mlp(std::vector<std::size_t> widths, Activation hidden, Activation output = Activation::kIdentity);

  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  std::size_t num_layers() const { return widths_.size() - 1; }
  std::size_t num_params() const { return num_params_; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }

  // Fan-in scaled uniform: every weight and bias of layer l drawn from
  // U(-1/sqrt(n_l), 1/sqrt(n_l)).
  Vector init(Rng& rng) const;

  // Throws std::invalid_argument on a shape mismatch.
  void forward(const Vector& params, const RowMatrix& x, RowMatrix& y, Tape* tape = nullptr) const;
  RowMatrix forward(const Vector& params, const RowMatrix& x) const;

  // Accumulates dL/dparams into `grad` given dL/dy for the batch recorded in
  // `tape`. When `dx` is non-null it receives dL/dx.
  void backward(const Vector& params, Tape& tape, const RowMatrix& dy, Vector& grad,
                RowMatrix* dx = nullptr) const;

  bool operator==(const Mlp& other) const {
    return widths_ == other.widths_ && hidden_ == other.hidden_ && output_ == other.output_;
  }

 private:
  Activation activation(std::size_t layer) const {
    return layer + 1 == num_layers() ? output_ : hidden_;
  }
  void check_params(const Vector& params) const;

  std::vector<std::size_t> widths_;
  Activation hidden_;
  Activation output_;
  std::vector<std::size_t> offsets_;
  std::size_t num_params_ = 0;
};

// Value and gradient of a scalar function of the network output.
// `loss(y, dy)` returns L(y) and writes dL/dy into dy (pre-sized like y).
using OutputLoss = std::function<double(const RowMatrix& y, RowMatrix& dy)>;

struct ValueAndGrad {
  double value = 0.0;
  Vector grad;
};

// Reverse-mode gradient with finiteness checks; a non-finite intermediate
// raises NumericalError naming the layer and pass.
ValueAndGrad grad_scalar(const Mlp& net, const Vector& params, const RowMatrix& x,
                         const OutputLoss& loss);

// Row j holds d y_j[dim] / d params for input row j.
RowMatrix network_jacobian(const Mlp& net, const Vector& params, const RowMatrix& x,
                           std::size_t dim);

// sum_j sum_d u(j, d) * d y_j[d] / d params without forming the Jacobian.
Vector vector_jacobian_product(const Mlp& net, const Vector& params, const RowMatrix& x,
                               const RowMatrix& u);

}  // namespace mblab::diffcore
