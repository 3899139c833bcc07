#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace mblab::diffcore {

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;

  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// Bias-corrected Adam with decoupled weight decay:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad,
               const AdamConfig& cfg);

// Rescales `grad` in place so its Euclidean norm is at most max_norm.
// Returns the norm before clipping.
double clip_by_global_norm(Eigen::Ref<Eigen::VectorXd> grad, double max_norm);

}  // namespace mblab::diffcore
