#include "mblab/diffcore/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "mblab/core/errors.hpp"
#include "mblab/simd/kernels.hpp"

namespace mblab::diffcore {
namespace {

void apply_activation(Activation a, const RowMatrix& z, RowMatrix& out) {
  const auto& k = simd::active();
  const auto n = static_cast<std::size_t>(z.size());
  out.resize(z.rows(), z.cols());
  switch (a) {
    case Activation::kIdentity: out = z; break;
    case Activation::kLeakyRelu: k.leaky_relu(z.data(), kLeakySlope, out.data(), n); break;
    case Activation::kSwish: k.swish(z.data(), out.data(), n); break;
    case Activation::kTanh: out = z.array().tanh(); break;
  }
}

// delta <- delta * act'(z), in place.
void activation_backward(Activation a, const RowMatrix& z, const RowMatrix& out, RowMatrix& delta) {
  const auto& k = simd::active();
  const auto n = static_cast<std::size_t>(z.size());
  switch (a) {
    case Activation::kIdentity: break;
    case Activation::kLeakyRelu: k.leaky_relu_backward(z.data(), delta.data(), kLeakySlope, delta.data(), n); break;
    case Activation::kSwish: k.swish_backward(z.data(), delta.data(), delta.data(), n); break;
    case Activation::kTanh: delta.array() *= 1.0 - out.array().square(); break;
  }
}

bool finite(const RowMatrix& m) { return m.allFinite(); }

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kSwish: return "swish";
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "swish") return Activation::kSwish;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<std::size_t> widths, Activation hidden, Activation output)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (std::size_t w : widths_) {
    if (w == 0) throw std::invalid_argument("Mlp: zero layer width");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
}

Vector Mlp::init(Rng& rng) const {
  Vector p(static_cast<Eigen::Index>(num_params_));
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    const std::size_t end = l + 1 < num_layers() ? offsets_[l + 1] : num_params_;
    for (std::size_t i = offsets_[l]; i < end; ++i) p[static_cast<Eigen::Index>(i)] = uniform(rng, -bound, bound);
  }
  return p;
}

void Mlp::check_params(const Vector& params) const {
  if (static_cast<std::size_t>(params.size()) != num_params_) {
    throw std::invalid_argument("Mlp: expected " + std::to_string(num_params_) + " parameters, got " +
                                std::to_string(params.size()));
  }
}

void Mlp::forward(const Vector& params, const RowMatrix& x, RowMatrix& y, Tape* tape) const {
  check_params(params);
  if (static_cast<std::size_t>(x.cols()) != input_dim()) {
    throw std::invalid_argument("Mlp: input has " + std::to_string(x.cols()) + " columns, expected " +
                                std::to_string(input_dim()));
  }
  const auto batch = static_cast<std::size_t>(x.rows());
  Tape local;
  Tape& t = tape != nullptr ? *tape : local;
  t.inputs.resize(num_layers());
  t.pre.resize(num_layers());
  t.inputs[0] = x;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t n = widths_[l];
    const std::size_t m = widths_[l + 1];
    const double* w = params.data() + offsets_[l];
    const double* b = w + n * m;
    RowMatrix& z = t.pre[l];
    z.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < batch; ++r) std::copy(b, b + m, z.data() + r * m);
    simd::gemm(simd::Trans::kNo, simd::Trans::kNo, batch, m, n, t.inputs[l].data(), n, w, m, 1.0, z.data(), m);
    RowMatrix& out = l + 1 < num_layers() ? t.inputs[l + 1] : y;
    apply_activation(activation(l), z, out);
  }
}

RowMatrix Mlp::forward(const Vector& params, const RowMatrix& x) const {
  RowMatrix y;
  forward(params, x, y);
  return y;
}

void Mlp::backward(const Vector& params, Tape& tape, const RowMatrix& dy, Vector& grad,
                   RowMatrix* dx) const {
  check_params(params);
  if (static_cast<std::size_t>(grad.size()) != num_params_) {
    throw std::invalid_argument("Mlp::backward: gradient has wrong size");
  }
  const auto batch = static_cast<std::size_t>(tape.inputs[0].rows());
  if (static_cast<std::size_t>(dy.rows()) != batch || static_cast<std::size_t>(dy.cols()) != output_dim()) {
    throw std::invalid_argument("Mlp::backward: upstream gradient has wrong shape");
  }
  tape.delta = dy;
  for (std::size_t li = num_layers(); li-- > 0;) {
    const std::size_t n = widths_[li];
    const std::size_t m = widths_[li + 1];
    const RowMatrix& z = tape.pre[li];
    if (activation(li) == Activation::kTanh) {
      const RowMatrix out = z.array().tanh();
      activation_backward(Activation::kTanh, z, out, tape.delta);
    } else {
      activation_backward(activation(li), z, z, tape.delta);
    }
    const double* w = params.data() + offsets_[li];
    double* gw = grad.data() + offsets_[li];
    double* gb = gw + n * m;
    // dW += A^T delta
    simd::gemm(simd::Trans::kYes, simd::Trans::kNo, n, m, batch, tape.inputs[li].data(), n,
               tape.delta.data(), m, 1.0, gw, m);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* d = tape.delta.data() + r * m;
      for (std::size_t j = 0; j < m; ++j) gb[j] += d[j];
    }
    if (li > 0 || dx != nullptr) {
      // dA = delta W^T
      RowMatrix& next = li > 0 ? tape.delta_next : *dx;
      next.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(n));
      simd::gemm(simd::Trans::kNo, simd::Trans::kYes, batch, n, m, tape.delta.data(), m, w, m, 0.0,
                 next.data(), n);
      if (li > 0) std::swap(tape.delta, tape.delta_next);
    }
  }
}

ValueAndGrad grad_scalar(const Mlp& net, const Vector& params, const RowMatrix& x,
                         const OutputLoss& loss) {
  if (!params.allFinite()) throw NumericalError("grad_scalar", "non-finite parameters");
  Mlp::Tape tape;
  RowMatrix y;
  net.forward(params, x, y, &tape);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (!finite(tape.pre[l])) {
      throw NumericalError("mlp layer " + std::to_string(l) + " forward", "non-finite pre-activation");
    }
  }
  if (!finite(y)) throw NumericalError("mlp output", "non-finite output");
  RowMatrix dy = RowMatrix::Zero(y.rows(), y.cols());
  ValueAndGrad out;
  out.value = loss(y, dy);
  if (!std::isfinite(out.value)) throw NumericalError("loss", "non-finite value");
  if (!finite(dy)) throw NumericalError("loss", "non-finite output gradient");
  out.grad = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  net.backward(params, tape, dy, out.grad);
  if (!out.grad.allFinite()) throw NumericalError("mlp backward", "non-finite parameter gradient");
  return out;
}

RowMatrix network_jacobian(const Mlp& net, const Vector& params, const RowMatrix& x, std::size_t dim) {
  if (dim >= net.output_dim()) throw std::invalid_argument("network_jacobian: output index out of range");
  RowMatrix jac(x.rows(), static_cast<Eigen::Index>(net.num_params()));
  Mlp::Tape tape;
  RowMatrix y;
  Vector g(static_cast<Eigen::Index>(net.num_params()));
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    const RowMatrix row = x.row(j);
    net.forward(params, row, y, &tape);
    RowMatrix dy = RowMatrix::Zero(1, static_cast<Eigen::Index>(net.output_dim()));
    dy(0, static_cast<Eigen::Index>(dim)) = 1.0;
    g.setZero();
    net.backward(params, tape, dy, g);
    jac.row(j) = g.transpose();
  }
  return jac;
}

Vector vector_jacobian_product(const Mlp& net, const Vector& params, const RowMatrix& x,
                               const RowMatrix& u) {
  Mlp::Tape tape;
  RowMatrix y;
  net.forward(params, x, y, &tape);
  Vector g = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  net.backward(params, tape, u, g);
  return g;
}

}  // namespace mblab::diffcore
