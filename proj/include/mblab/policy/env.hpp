#pragma once

// Episodic goal-reaching environments: the simulated plant, or a learned
// one-step model rolled out as a simulator.

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "mblab/bnn/dynamics_model.hpp"
#include "mblab/core/rng.hpp"
#include "mblab/policy/reward.hpp"
#include "mblab/simenv/plant.hpp"

namespace mblab::policy {

// Initial states and goals. Goals lie in a disc of radius goal_radius_max
// around the initial base position, at heights in [goal_height_min,
// goal_height_max].
struct Workspace {
  simenv::InitialStateBox start;
  double goal_radius_max = 1.3;
  double goal_height_min = 0.2;
  double goal_height_max = 1.0;

  void validate() const;
};

RobotState sample_initial(const Workspace& ws, Rng& rng);
Goal sample_goal(const Workspace& ws, const RobotState& s0, Rng& rng);

struct StepResult {
  Observation obs{};
  double reward = 0.0;
  RewardTerms terms;
  bool terminated = false;  // no bootstrapping past this step
  bool truncated = false;   // episode length reached
};

class Env {
 public:
  virtual ~Env() = default;
  // Samples an initial state and goal.
  Observation reset(Rng& rng);
  virtual Observation reset_to(const RobotState& s0, const Goal& goal) = 0;
  virtual StepResult step(const Action& u) = 0;
  virtual RobotState state() const = 0;

  void set_goal(const Goal& g) { goal_ = g; }
  const Goal& goal() const { return goal_; }
  std::size_t steps() const { return t_; }

 protected:
  Env(Workspace ws, RewardConfig reward, std::size_t episode_length);
  StepResult finish_step(const RobotState& next, const Action& u, bool diverged);

  Workspace ws_;
  RewardConfig reward_;
  std::size_t episode_length_;
  Goal goal_;
  std::size_t t_ = 0;
};

class PlantEnv final : public Env {
 public:
  PlantEnv(simenv::PlantConfig plant, Workspace ws, RewardConfig reward, std::size_t episode_length,
           std::uint64_t seed);
  Observation reset_to(const RobotState& s0, const Goal& goal) override;
  StepResult step(const Action& u) override;
  RobotState state() const override { return plant_.state(); }

 private:
  simenv::Plant plant_;
};

// One member of the model, drawn uniformly at every reset, drives the whole
// episode. Predictions are added to the encoded state and (sin, cos) is
// renormalized. Non-finite or out-of-bound states end the episode.
class ModelEnv final : public Env {
 public:
  ModelEnv(std::shared_ptr<const bnn::DynamicsModel> model, Workspace ws, RewardConfig reward,
           std::size_t episode_length, double safety_bound, std::uint64_t seed);
  Observation reset_to(const RobotState& s0, const Goal& goal) override;
  StepResult step(const Action& u) override;
  RobotState state() const override { return decode_state(enc_); }

  std::size_t member() const { return member_; }
  void set_member(std::size_t m);
  const EncodedState& encoded() const { return enc_; }
  const Action& prev2() const { return prev2_; }
  const Action& prev1() const { return prev1_; }

 private:
  std::shared_ptr<const bnn::DynamicsModel> model_;
  double safety_bound_;
  Rng member_rng_;
  std::size_t member_ = 0;
  EncodedState enc_{};
  Action prev2_, prev1_;
};

// Builds environment i of a batch.
using EnvFactory = std::function<std::unique_ptr<Env>(std::size_t index, std::uint64_t seed)>;

EnvFactory plant_env_factory(const simenv::PlantConfig& plant, const Workspace& ws, const RewardConfig& reward,
                             std::size_t episode_length);
EnvFactory model_env_factory(std::shared_ptr<const bnn::DynamicsModel> model, const Workspace& ws,
                             const RewardConfig& reward, std::size_t episode_length, double safety_bound = 100.0);

}  // namespace mblab::policy
