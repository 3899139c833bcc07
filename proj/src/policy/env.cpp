#include "mblab/policy/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mblab::policy {
namespace {

Observation sanitized_observation(const RobotState& s, const Goal& g, double bound) {
  std::array<double, kStateDim> v = s.to_array();
  for (double& x : v) x = std::isfinite(x) ? std::clamp(x, -bound, bound) : 0.0;
  return make_observation(encode_state(RobotState::from_array(v)), g);
}

}  // namespace

void Workspace::validate() const {
  if (!(start.half_extent >= 0.0 && start.ee_radius_min >= 0.0 && start.ee_radius_min <= start.ee_radius_max &&
        start.ee_height_min <= start.ee_height_max)) {
    throw std::invalid_argument("workspace: invalid start box");
  }
  if (!(goal_radius_max >= 0.0 && goal_height_min <= goal_height_max)) {
    throw std::invalid_argument("workspace: invalid goal band");
  }
}

RobotState sample_initial(const Workspace& ws, Rng& rng) { return simenv::sample_initial_state(ws.start, rng); }

Goal sample_goal(const Workspace& ws, const RobotState& s0, Rng& rng) {
  // Uniform over the disc.
  const double r = ws.goal_radius_max * std::sqrt(uniform(rng, 0.0, 1.0));
  const double ang = uniform(rng, -std::numbers::pi, std::numbers::pi);
  Goal g;
  g.p = {s0.p_base[0] + r * std::cos(ang), s0.p_base[1] + r * std::sin(ang),
         ws.goal_height_min == ws.goal_height_max ? ws.goal_height_min
                                                  : uniform(rng, ws.goal_height_min, ws.goal_height_max)};
  return g;
}

Env::Env(Workspace ws, RewardConfig reward, std::size_t episode_length)
    : ws_(std::move(ws)), reward_(reward), episode_length_(episode_length) {
  ws_.validate();
  reward_.validate();
  if (episode_length_ == 0) throw std::invalid_argument("env: episode length must be >= 1");
}

Observation Env::reset(Rng& rng) {
  const RobotState s0 = sample_initial(ws_, rng);
  const Goal g = sample_goal(ws_, s0, rng);
  return reset_to(s0, g);
}

StepResult Env::finish_step(const RobotState& next, const Action& u, bool diverged) {
  ++t_;
  StepResult r;
  r.truncated = t_ >= episode_length_;
  if (diverged) {
    r.terminated = true;
    r.obs = sanitized_observation(next, goal_, 100.0);
    return r;
  }
  r.terms = reward(next, goal_, u, reward_);
  r.reward = r.terms.total;
  r.obs = make_observation(encode_state(next), goal_);
  return r;
}

PlantEnv::PlantEnv(simenv::PlantConfig plant, Workspace ws, RewardConfig reward, std::size_t episode_length,
                   std::uint64_t seed)
    : Env(std::move(ws), reward, episode_length), plant_(std::move(plant), seed) {}

Observation PlantEnv::reset_to(const RobotState& s0, const Goal& goal) {
  plant_.reset(s0);
  goal_ = goal;
  t_ = 0;
  return make_observation(encode_state(plant_.state()), goal_);
}

StepResult PlantEnv::step(const Action& u) {
  const Action clipped = plant_.config().command_limits.clip(u);
  plant_.step(clipped);
  return finish_step(plant_.state(), clipped, plant_.diverged());
}

ModelEnv::ModelEnv(std::shared_ptr<const bnn::DynamicsModel> model, Workspace ws, RewardConfig reward,
                   std::size_t episode_length, double safety_bound, std::uint64_t seed)
    : Env(std::move(ws), reward, episode_length),
      model_(std::move(model)),
      safety_bound_(safety_bound),
      member_rng_(make_rng(seed, {tag("model_env_member")})) {
  if (!model_ || model_->num_members() == 0) throw std::invalid_argument("model env: empty model");
  if (!(safety_bound_ > 0.0)) throw std::invalid_argument("model env: safety bound must be positive");
}

void ModelEnv::set_member(std::size_t m) {
  if (m >= model_->num_members()) throw std::out_of_range("model env: member index");
  member_ = m;
}

Observation ModelEnv::reset_to(const RobotState& s0, const Goal& goal) {
  enc_ = encode_state(s0);
  prev2_ = Action{};
  prev1_ = Action{};
  goal_ = goal;
  t_ = 0;
  member_ = std::uniform_int_distribution<std::size_t>(0, model_->num_members() - 1)(member_rng_);
  return make_observation(enc_, goal_);
}

StepResult ModelEnv::step(const Action& u) {
  const Action clipped = simenv::CommandLimits{}.clip(u);
  RowMatrix row(1, static_cast<Eigen::Index>(kInputDim));
  write_input_row(enc_, prev2_, prev1_, clipped, std::span<double, kInputDim>(row.data(), kInputDim));
  const RowMatrix delta = model_->predict(member_, row);
  EncodedState next{};
  bool diverged = false;
  for (std::size_t j = 0; j < kEncodedDim; ++j) {
    next[j] = enc_[j] + delta(0, static_cast<Eigen::Index>(j));
    if (!std::isfinite(next[j]) || std::abs(next[j]) > safety_bound_) diverged = true;
  }
  const double n = std::hypot(next[kEncSin], next[kEncCos]);
  if (!(n > 1e-12)) diverged = true;
  prev2_ = prev1_;
  prev1_ = clipped;
  if (diverged) return finish_step(decode_state(enc_), clipped, true);
  next[kEncSin] /= n;
  next[kEncCos] /= n;
  enc_ = next;
  return finish_step(decode_state(enc_), clipped, false);
}

EnvFactory plant_env_factory(const simenv::PlantConfig& plant, const Workspace& ws, const RewardConfig& reward,
                             std::size_t episode_length) {
  return [=](std::size_t index, std::uint64_t seed) -> std::unique_ptr<Env> {
    return std::make_unique<PlantEnv>(plant, ws, reward, episode_length, derive_seed(seed, {tag("plant_env"), index}));
  };
}

EnvFactory model_env_factory(std::shared_ptr<const bnn::DynamicsModel> model, const Workspace& ws,
                             const RewardConfig& reward, std::size_t episode_length, double safety_bound) {
  return [=](std::size_t index, std::uint64_t seed) -> std::unique_ptr<Env> {
    return std::make_unique<ModelEnv>(model, ws, reward, episode_length, safety_bound,
                                      derive_seed(seed, {tag("model_env"), index}));
  };
}

}  // namespace mblab::policy
