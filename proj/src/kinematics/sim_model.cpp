#include "mblab/kinematics/sim_model.hpp"

#include <cmath>
#include <stdexcept>

#include "mblab/core/errors.hpp"
#include "mblab/diffcore/adam.hpp"

namespace mblab::kinematics {
namespace {

EncodedState input_state(std::span<const double, kInputDim> x) {
  EncodedState e{};
  std::copy(x.begin(), x.begin() + kEncodedDim, e.begin());
  return e;
}

Action input_action(std::span<const double, kInputDim> x) {
  return Action::from_array(x.subspan<kInputCurrentAction, kActionDim>());
}

std::span<const double, kInputDim> row_span(const SupervisedSet& data, Eigen::Index r) {
  return std::span<const double, kInputDim>(data.x.row(r).data(), kInputDim);
}

// Per-row quantities that do not depend on the parameters.
struct RowCache {
  RobotState s;
  WorldAction uw;
  double lever_x = 0.0;
  double lever_y = 0.0;
  double sin0 = 0.0;
  double cos0 = 1.0;
};

RowCache make_cache(std::span<const double, kInputDim> x) {
  RowCache c;
  c.s = decode_state(input_state(x));
  c.uw = rotate_to_world(input_action(x), c.s.theta());
  c.lever_x = c.s.p_ee[0] - c.s.p_base[0];
  c.lever_y = c.s.p_ee[1] - c.s.p_base[1];
  c.sin0 = std::sin(c.s.theta());
  c.cos0 = std::cos(c.s.theta());
  return c;
}

}  // namespace

EncodedState predict_from_input(std::span<const double, kInputDim> x, const KinematicParams& phi,
                                double dt) {
  const RobotState s = decode_state(input_state(x));
  return predict_encoded_delta(s, input_action(x), phi, dt);
}

double encoded_delta_loss(const SupervisedSet& data, const KinematicParams& phi, double dt,
                          std::array<double, kNumParams>* grad) {
  if (data.empty()) throw std::invalid_argument("encoded_delta_loss: empty data");
  const auto& a = phi.alpha;
  const auto& b = phi.beta;
  const auto& g = phi.gamma;
  const double scale = 1.0 / (static_cast<double>(data.rows()) * static_cast<double>(kEncodedDim));
  constexpr std::array<double, 3> kCoupling = {1.0, 1.0, 0.0};

  std::array<double, kNumParams> acc{};
  double loss = 0.0;
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    const RowCache c = make_cache(row_span(data, r));
    const RobotState& s = c.s;

    Vec3 vb{}, pb{}, ve{}, pe{};
    for (std::size_t i = 0; i < 3; ++i) vb[i] = a[i] * s.v_base[i] + (1.0 - a[i]) * c.uw.base[i] + b[i];
    for (std::size_t i = 0; i < 3; ++i) pb[i] = s.p_base[i] + dt * g[i] * vb[i] + b[3 + i];
    const Vec3 ind = {-vb[2] * c.lever_y, vb[2] * c.lever_x, 0.0};
    for (std::size_t i = 0; i < 3; ++i) {
      ve[i] = a[3 + i] * s.v_ee[i] + (1.0 - a[3 + i]) * c.uw.ee[i] + b[6 + i] + kCoupling[i] * vb[i] + ind[i];
    }
    for (std::size_t i = 0; i < 3; ++i) pe[i] = s.p_ee[i] + dt * g[3 + i] * ve[i] + b[9 + i];
    const double sin1 = std::sin(pb[2]);
    const double cos1 = std::cos(pb[2]);

    const std::array<double, kEncodedDim> pred = {
        pb[0] - s.p_base[0], pb[1] - s.p_base[1], sin1 - c.sin0, cos1 - c.cos0,
        vb[0] - s.v_base[0], vb[1] - s.v_base[1], vb[2] - s.v_base[2],
        pe[0] - s.p_ee[0],   pe[1] - s.p_ee[1],   pe[2] - s.p_ee[2],
        ve[0] - s.v_ee[0],   ve[1] - s.v_ee[1],   ve[2] - s.v_ee[2]};
    std::array<double, kEncodedDim> d{};
    for (std::size_t j = 0; j < kEncodedDim; ++j) {
      const double res = pred[j] - data.y(r, static_cast<Eigen::Index>(j));
      loss += res * res;
      d[j] = 2.0 * res * scale;
    }
    if (grad == nullptr) continue;

    // Reverse pass through the step above.
    Vec3 g_pe = {d[7], d[8], d[9]};
    Vec3 g_ve = {d[10], d[11], d[12]};
    Vec3 g_vb = {d[4], d[5], d[6]};
    const Vec3 g_pb = {d[0], d[1], d[2] * cos1 - d[3] * sin1};
    for (std::size_t i = 0; i < 3; ++i) {
      g_ve[i] += dt * g[3 + i] * g_pe[i];
      acc[18 + 3 + i] += dt * ve[i] * g_pe[i];
      acc[6 + 9 + i] += g_pe[i];
    }
    double g_omega = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      acc[3 + i] += (s.v_ee[i] - c.uw.ee[i]) * g_ve[i];
      acc[6 + 6 + i] += g_ve[i];
      g_vb[i] += kCoupling[i] * g_ve[i];
    }
    g_omega += -c.lever_y * g_ve[0] + c.lever_x * g_ve[1];
    for (std::size_t i = 0; i < 3; ++i) {
      g_vb[i] += dt * g[i] * g_pb[i];
      acc[18 + i] += dt * vb[i] * g_pb[i];
      acc[6 + 3 + i] += g_pb[i];
    }
    g_vb[2] += g_omega;
    for (std::size_t i = 0; i < 3; ++i) {
      acc[i] += (s.v_base[i] - c.uw.base[i]) * g_vb[i];
      acc[6 + i] += g_vb[i];
    }
  }
  if (grad != nullptr) *grad = acc;
  return loss * scale;
}

FitResult fit_sim_model(const SupervisedSet& train, const KinematicParams& init,
                        const ParamPrior& bounds, const FitConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("fit_sim_model: empty training set");
  bounds.validate();
  FitResult result;
  result.params = init;
  if (cfg.steps == 0) return result;

  diffcore::AdamState state(kNumParams);
  const diffcore::AdamConfig adam{cfg.lr, cfg.weight_decay};
  auto flat = init.to_array();
  Eigen::Map<Eigen::VectorXd> params(flat.data(), kNumParams);
  result.loss_history.reserve(cfg.steps);
  std::array<double, kNumParams> grad{};
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const double loss = encoded_delta_loss(train, KinematicParams::from_array(flat), cfg.dt, &grad);
    if (!std::isfinite(loss)) {
      throw NumericalError("fit_sim_model", "loss became non-finite at step " + std::to_string(step));
    }
    result.loss_history.push_back(loss);
    diffcore::adam_step(state, params, Eigen::Map<const Eigen::VectorXd>(grad.data(), kNumParams), adam);
    flat = bounds.project(KinematicParams::from_array(flat)).to_array();
  }
  result.params = KinematicParams::from_array(flat);
  return result;
}

std::array<double, kEncodedDim> residual_std(const SupervisedSet& data, const KinematicParams& phi,
                                             double dt) {
  if (data.empty()) throw std::invalid_argument("residual_std: empty data");
  std::array<double, kEncodedDim> sum_sq{};
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    const EncodedState pred = predict_from_input(row_span(data, r), phi, dt);
    for (std::size_t j = 0; j < kEncodedDim; ++j) {
      const double res = data.y(r, static_cast<Eigen::Index>(j)) - pred[j];
      sum_sq[j] += res * res;
    }
  }
  const double n = static_cast<double>(data.rows());
  std::array<double, kEncodedDim> out{};
  for (std::size_t j = 0; j < kEncodedDim; ++j) out[j] = std::max(std::sqrt(sum_sq[j] / n), 1e-6);
  return out;
}

}  // namespace mblab::kinematics
