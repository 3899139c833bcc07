#pragma once

// Reference shapes for the end-effector and closed-loop tracking on the
// plant.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mblab/core/types.hpp"
#include "mblab/policy/sac.hpp"
#include "mblab/simenv/plant.hpp"

namespace mblab::experiments {

enum class ShapeKind { kEllipse, kHelix };

std::string to_string(ShapeKind k);
ShapeKind shape_from_string(const std::string& s);

// Ellipse: center + (a_x cos w, a_y sin w, 0) at height z0.
// Helix: a_x = a_y = radius, z = z0 + pitch * t / period.
// w = 2 pi t / period in both cases; period is in steps.
struct ReferenceParams {
  ShapeKind kind = ShapeKind::kEllipse;
  Vec3 center{0.1, 0.0, 0.0};
  double a_x = 0.6;
  double a_y = 0.4;
  double z0 = 0.6;
  double pitch = 0.0;  // per revolution
  double period = 120.0;
  std::size_t steps = 120;

  static ReferenceParams ellipse();
  static ReferenceParams helix();
  void validate() const;
};

struct ReferenceTrajectory {
  ReferenceParams params;
  std::vector<Vec3> goals;  // g_0 .. g_T

  // Largest distance between consecutive goals.
  double max_spacing() const;
};

ReferenceTrajectory make_reference(const ReferenceParams& p);

struct RunReport {
  std::string shape;
  std::vector<Vec3> realized;  // p_0 .. p_k, k = steps completed
  std::vector<Vec3> goals;     // g_0 .. g_k
  double mean_error = 0.0;     // (1/k) sum_{t=1..k} |p_t - g_t|
  bool truncated = false;
  std::size_t steps = 0;
};

// Mean over t = 1..k of |realized[t] - goals[t]|; both sequences must have
// the same length >= 2.
double mean_tracking_error(const std::vector<Vec3>& realized, const std::vector<Vec3>& goals);

using Controller = std::function<Action(const Observation&)>;
// Applies u to s in place; returns false when the rollout has to stop.
using Stepper = std::function<bool(const Action& u, RobotState& s)>;

// At step t the controller sees s_t with g_t in the goal slot; the step then
// yields s_{t+1}. Stops early and flags truncation when the stepper fails or
// the state leaves the finite range.
RunReport track_with(const Controller& controller, const Stepper& stepper, const RobotState& s0,
                     const ReferenceTrajectory& traj);

// Base at the origin facing +x, at rest, with the end-effector on g_0.
RobotState tracking_start(const ReferenceTrajectory& traj);

// Rolls the policy on the plant from tracking_start.
RunReport track(const policy::Policy& policy, const simenv::PlantConfig& plant_cfg,
                const ReferenceTrajectory& traj, std::uint64_t seed);

}  // namespace mblab::experiments
