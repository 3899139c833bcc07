#pragma once

// Fitting the kinematic model directly to data (the deterministic baseline)
// and evaluating it on model-input rows.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mblab/core/types.hpp"
#include "mblab/kinematics/kinematics.hpp"

namespace mblab::kinematics {

// Kinematic prediction for one 31-column model-input row. Only the current
// action u_t is used; the action history columns are ignored. The yaw is
// recovered with atan2, so the (sin, cos) pair need not be normalized, and
// the returned difference is taken against the decoded state.
EncodedState predict_from_input(std::span<const double, kInputDim> x, const KinematicParams& phi,
                                double dt);

// Mean over all N x 13 entries of the squared error between kinematic
// predictions and targets. When `grad` is non-null it receives the exact
// gradient with respect to the 24 parameters in flat order.
double encoded_delta_loss(const SupervisedSet& data, const KinematicParams& phi, double dt,
                          std::array<double, kNumParams>* grad = nullptr);

struct FitConfig {
  std::size_t steps = 10'000;
  double lr = 1e-3;
  double weight_decay = 1e-3;
  double dt = kDefaultDt;
};

struct FitResult {
  KinematicParams params;
  std::vector<double> loss_history;  // loss before each step
};

// Full-batch Adam on encoded_delta_loss, projecting onto `bounds` after every
// step. Throws NumericalError when the loss becomes non-finite.
FitResult fit_sim_model(const SupervisedSet& train, const KinematicParams& init,
                        const ParamPrior& bounds, const FitConfig& cfg);

// Fitted kinematic model with a homoscedastic Gaussian likelihood per output
// dimension.
struct SimModel {
  KinematicParams params;
  std::array<double, kEncodedDim> residual_std{};
  double dt = kDefaultDt;

  EncodedState predict(std::span<const double, kInputDim> x) const {
    return predict_from_input(x, params, dt);
  }
};

// Root-mean-square residual of the kinematic prediction per output
// dimension on `data`, floored at 1e-6.
std::array<double, kEncodedDim> residual_std(const SupervisedSet& data, const KinematicParams& phi,
                                             double dt);

}  // namespace mblab::kinematics
