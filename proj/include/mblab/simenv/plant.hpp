#pragma once

// Ground-truth plant: the kinematic recurrence with parameters the learner
// does not know, plus an actuation delay, quadratic drag, and additive
// Gaussian state noise.

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "mblab/core/rng.hpp"
#include "mblab/core/types.hpp"
#include "mblab/kinematics/kinematics.hpp"

namespace mblab::simenv {

// Symmetric per-channel bounds |u_i| <= max_abs[i].
struct CommandLimits {
  std::array<double, kActionDim> max_abs{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

  Action clip(const Action& u) const;
  bool contains(const Action& u) const;
};

struct PlantConfig {
  kinematics::KinematicParams true_params = default_true_params();
  int delay_steps = 2;
  std::array<double, kStateDim> noise_std{};
  double drag_coeff = 0.0;
  // Arm workspace: planar ee-to-base distance at most arm_reach and ee height
  // within [ee_z_min, ee_z_max]. The ee is projected back onto the boundary
  // and loses its outward velocity relative to the base. arm_reach = 0
  // disables the limit.
  double arm_reach = 0.0;
  double ee_z_min = 0.0;
  double ee_z_max = 1.5;
  double dt = kinematics::kDefaultDt;
  CommandLimits command_limits;
  // Any state entry beyond this magnitude counts as divergence.
  double safety_bound = 100.0;

  static kinematics::KinematicParams default_true_params();
  // The perturbed plant used throughout the experiments.
  static PlantConfig defaults();
  // Delay, drag, noise and the arm workspace disabled.
  static PlantConfig ideal(const kinematics::KinematicParams& params);

  void validate() const;
};

// `key = value` lines; keys mirror the PlantConfig fields. true_params takes
// 24 values, noise_std 12, command_limits 6 (comma or space separated).
// '#' starts a comment. Unset keys keep their defaults().
PlantConfig parse_plant_config(std::istream& in);
PlantConfig load_plant_config(const std::string& path);
void write_plant_config(std::ostream& out, const PlantConfig& cfg);

class Plant {
 public:
  Plant(PlantConfig cfg, std::uint64_t seed);

  // Sets the state and refills the pending-command queue with zeros.
  void reset(const RobotState& s);

  // Applies the command issued delay_steps steps ago, then queues `u`
  // (clipped to the command limits).
  const RobotState& step(const Action& u);

  const RobotState& state() const { return state_; }
  const PlantConfig& config() const { return cfg_; }
  const std::deque<Action>& pending() const { return pending_; }
  bool diverged() const;

 private:
  void limit_workspace(RobotState& s) const;

  PlantConfig cfg_;
  RobotState state_;
  std::deque<Action> pending_;
  Rng rng_;
  std::normal_distribution<double> normal_;
};

// Base pose uniform in a square, yaw uniform, end-effector at a uniform
// planar distance and height relative to the base, zero velocities.
struct InitialStateBox {
  double half_extent = 2.0;
  double ee_radius_min = 0.5;
  double ee_radius_max = 1.0;
  double ee_height_min = 0.3;
  double ee_height_max = 0.9;
};

RobotState sample_initial_state(const InitialStateBox& box, Rng& rng);

// Low-pass filtered mean-reverting random commands, starting from rest.
// Per channel: o' = clip((1 - reversion) o + step_scale xi), xi ~ N(0, 1)
// truncated at 2 sigma, then u' = clip(smoothing u + (1 - smoothing) o').
struct ExcitationConfig {
  double step_scale = 0.15;
  double reversion = 0.05;
  double smoothing = 0.8;
  // collect_dataset adds ee_centering * (ee_nominal - offset) to the ee
  // command, offset being the ee position relative to the base in the body
  // frame (x forward, z absolute height). 0 disables.
  double ee_centering = 1.0;
  Vec3 ee_nominal{0.7, 0.0, 0.6};
};

// The excitation command with the ee centring term for state s, clipped.
Action centred_command(const Action& u, const RobotState& s, const ExcitationConfig& cfg, const CommandLimits& limits);

std::vector<Action> excitation_policy(std::uint64_t seed, std::size_t horizon,
                                      const ExcitationConfig& cfg = {},
                                      const CommandLimits& limits = {});

struct CollectResult {
  std::vector<Transition> transitions;
  std::vector<std::int64_t> truncated_episodes;
};

// n_episodes rollouts of the excitation policy from sampled initial states.
// Each episode draws from its own seed stream. Episodes that diverge are
// truncated at the last finite, in-bound state and listed in the result.
CollectResult collect_dataset(const PlantConfig& cfg, std::size_t n_episodes,
                              std::size_t episode_len, std::uint64_t seed,
                              const ExcitationConfig& excitation = {},
                              const InitialStateBox& box = {});

}  // namespace mblab::simenv
