#pragma once

// Parametric kinematic model of a quadruped base carrying an arm.
//
// Body-frame commands are rotated into the world frame by the current yaw,
// then both velocity blocks follow a first-order lag toward the command:
//
//   v_b'  = A_b v_b + (I - A_b) R(theta) u_b + beta[0:3]
//   p_b'  = p_b + dt G_b v_b' + beta[3:6]
//   v_ee' = A_ee v_ee + (I - A_ee) R(theta) u_ee + beta[6:9] + D v_b' + v_ind
//   p_ee' = p_ee + dt G_ee v_ee' + beta[9:12]
//
// with A = diag(alpha), G = diag(gamma), D = diag(1, 1, 0) and v_ind the
// velocity that the new yaw rate induces at the end-effector through the
// planar base-to-ee lever arm.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "mblab/core/rng.hpp"
#include "mblab/core/types.hpp"

namespace mblab::kinematics {

inline constexpr std::size_t kNumParams = 24;
inline constexpr double kDefaultDt = 1.0 / 15.0;

// Flat order: alpha[0..5], beta[0..11], gamma[0..5].
struct KinematicParams {
  std::array<double, 6> alpha{};
  std::array<double, 12> beta{};
  std::array<double, 6> gamma{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

  std::array<double, kNumParams> to_array() const;
  static KinematicParams from_array(std::span<const double, kNumParams> v);

  bool operator==(const KinematicParams&) const = default;

  // alpha in [0, 1), gamma > 0, all finite.
  bool is_valid() const;
};

// Independent uniform bounds per parameter.
struct ParamPrior {
  std::array<double, kNumParams> lower{};
  std::array<double, kNumParams> upper{};

  // alpha in [0.1, 0.95], beta velocity entries in [-0.05, 0.05], beta
  // position entries in [-0.01, 0.01], gamma in [0.7, 1.3].
  static ParamPrior defaults();
  // Every bound equal to the given parameters.
  static ParamPrior degenerate(const KinematicParams& at);

  // Throws std::invalid_argument unless lower <= upper and both bound sets
  // are valid parameters.
  void validate() const;
  KinematicParams project(const KinematicParams& p) const;
  bool contains(const KinematicParams& p) const;
  KinematicParams midpoint() const;
};

struct WorldAction {
  Vec3 base{};
  Vec3 ee{};
};

WorldAction rotate_to_world(const Action& u, double theta);

// (-omega d sin(phi), omega d cos(phi), 0) for the planar lever arm d at
// angle phi from the base axis to the end-effector. Zero when d == 0.
Vec3 induced_velocity(const RobotState& s, double omega_next);

// One forward-Euler step; yaw wrapped into (-pi, pi].
RobotState step_kinematic(const RobotState& s, const Action& u, const KinematicParams& phi,
                          double dt);

// Same step with a quadratic drag drag * v * |v| removed from every new
// velocity channel before integration.
RobotState step_kinematic(const RobotState& s, const Action& u, const KinematicParams& phi,
                          double dt, double drag);

// Encoded-state difference of one kinematic step; the quantity the learned
// models predict.
EncodedState predict_encoded_delta(const RobotState& s, const Action& u, const KinematicParams& phi,
                                   double dt);

KinematicParams sample_params(const ParamPrior& prior, Rng& rng);
KinematicParams sample_params(const ParamPrior& prior, std::uint64_t seed);

// Plain-text parameter file: 24 whitespace-separated values in flat order,
// '#' starts a comment.
void write_params(std::ostream& out, const KinematicParams& p);
KinematicParams read_params(std::istream& in);
void save_params(const std::string& path, const KinematicParams& p);
KinematicParams load_params(const std::string& path);

}  // namespace mblab::kinematics
