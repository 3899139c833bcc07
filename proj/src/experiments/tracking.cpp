#include "mblab/experiments/tracking.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mblab::experiments {
namespace {

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace

std::string to_string(ShapeKind k) { return k == ShapeKind::kEllipse ? "ellipse" : "helix"; }

ShapeKind shape_from_string(const std::string& s) {
  if (s == "ellipse") return ShapeKind::kEllipse;
  if (s == "helix") return ShapeKind::kHelix;
  throw std::invalid_argument("unknown shape '" + s + "'");
}

ReferenceParams ReferenceParams::ellipse() { return ReferenceParams{}; }

ReferenceParams ReferenceParams::helix() {
  ReferenceParams p;
  p.kind = ShapeKind::kHelix;
  p.center = {0.3, 0.0, 0.0};
  p.a_x = p.a_y = 0.4;
  p.z0 = 0.45;
  p.pitch = 0.3;
  p.period = 80.0;  // 1.5 revolutions in 120 steps
  return p;
}

void ReferenceParams::validate() const {
  if (!(a_x >= 0.0 && a_y >= 0.0 && period > 0.0 && steps > 0)) {
    throw std::invalid_argument("reference: semi-axes must be non-negative, period and steps positive");
  }
  if (kind == ShapeKind::kHelix && a_x != a_y) throw std::invalid_argument("reference: helix needs a_x == a_y");
  if (kind == ShapeKind::kEllipse && pitch != 0.0) throw std::invalid_argument("reference: ellipse has no pitch");
}

double ReferenceTrajectory::max_spacing() const {
  double m = 0.0;
  for (std::size_t t = 1; t < goals.size(); ++t) m = std::max(m, dist(goals[t], goals[t - 1]));
  return m;
}

ReferenceTrajectory make_reference(const ReferenceParams& p) {
  p.validate();
  ReferenceTrajectory r{p, {}};
  r.goals.reserve(p.steps + 1);
  for (std::size_t t = 0; t <= p.steps; ++t) {
    const double frac = static_cast<double>(t) / p.period;
    const double w = 2.0 * std::numbers::pi * frac;
    r.goals.push_back({p.center[0] + p.a_x * std::cos(w), p.center[1] + p.a_y * std::sin(w),
                       p.center[2] + p.z0 + p.pitch * frac});
  }
  return r;
}

double mean_tracking_error(const std::vector<Vec3>& realized, const std::vector<Vec3>& goals) {
  if (realized.size() != goals.size() || realized.size() < 2) {
    throw std::invalid_argument("tracking error: need equally long sequences of at least two points");
  }
  double s = 0.0;
  for (std::size_t t = 1; t < realized.size(); ++t) s += dist(realized[t], goals[t]);
  return s / static_cast<double>(realized.size() - 1);
}

RunReport track_with(const Controller& controller, const Stepper& stepper, const RobotState& s0,
                     const ReferenceTrajectory& traj) {
  RunReport rep;
  rep.shape = to_string(traj.params.kind);
  RobotState s = s0;
  rep.realized.push_back(s.p_ee);
  rep.goals.push_back(traj.goals[0]);
  const std::size_t T = traj.goals.size() - 1;
  for (std::size_t t = 0; t < T; ++t) {
    const Action u = controller(make_observation(encode_state(s), Goal{traj.goals[t]}));
    if (!stepper(u, s) || !s.is_finite()) {
      rep.truncated = true;
      break;
    }
    rep.realized.push_back(s.p_ee);
    rep.goals.push_back(traj.goals[t + 1]);
  }
  rep.steps = rep.realized.size() - 1;
  rep.mean_error = rep.steps > 0 ? mean_tracking_error(rep.realized, rep.goals) : std::nan("");
  return rep;
}

RobotState tracking_start(const ReferenceTrajectory& traj) {
  RobotState s;
  s.p_ee = traj.goals.at(0);
  return s;
}

RunReport track(const policy::Policy& policy, const simenv::PlantConfig& plant_cfg,
                const ReferenceTrajectory& traj, std::uint64_t seed) {
  simenv::Plant plant(plant_cfg, seed);
  const RobotState s0 = tracking_start(traj);
  plant.reset(s0);
  const Controller ctl = [&](const Observation& o) { return policy::policy_act(policy, o); };
  const Stepper step = [&](const Action& u, RobotState& s) {
    plant.step(u);
    if (plant.diverged()) return false;
    s = plant.state();
    return true;
  };
  return track_with(ctl, step, s0, traj);
}

}  // namespace mblab::experiments
