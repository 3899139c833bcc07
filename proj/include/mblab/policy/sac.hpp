#pragma once

// Goal-conditioned soft actor-critic.
//
// The actor maps an observation to a mean and a raw log-std per action
// channel. The log-std is squashed into [log_std_min, log_std_max] and the
// sampled pre-activation u = mean + std * eps is mapped to a = limits * tanh(u).
// Twin critics with Polyak-averaged targets and an automatically tuned
// entropy temperature.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mblab/core/errors.hpp"
#include "mblab/diffcore/mlp.hpp"
#include "mblab/policy/env.hpp"
#include "mblab/simenv/plant.hpp"

namespace mblab::policy {

struct SacConfig {
  std::size_t episode_length = 120;
  double discount = 0.99;
  double tau = 0.005;
  std::size_t batch_size = 64;
  std::size_t replay_min = 2048;
  std::size_t replay_max = 50000;
  std::size_t updates_per_round = 1024;
  std::size_t hidden = 64;
  std::size_t hidden_layers = 2;
  double lr_actor = 1e-4;
  double lr_critic = 1e-4;
  double lr_alpha = 1e-4;
  std::size_t num_envs = 64;
  std::size_t steps_per_round = 16;
  double reward_scale = 1.0;
  double max_grad_norm = 100.0;
  std::size_t total_env_steps = 200000;
  double init_log_alpha = 0.0;
  // Defaults to -|A| when left at 0.
  double target_entropy = 0.0;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  std::size_t eval_episodes = 128;
  // Running mean / std of the collected observations, applied to actor and
  // critic inputs.
  std::size_t normalize_observations = 1;

  double effective_target_entropy() const;
  void validate() const;
};

// `key = value` lines with the SacConfig field names; '#' starts a comment.
SacConfig parse_sac_config(std::istream& in);
SacConfig load_sac_config(const std::string& path);
void write_sac_config(std::ostream& out, const SacConfig& cfg);

struct Policy {
  diffcore::Mlp actor{{kObservationDim, 64, 64, 2 * kActionDim}, diffcore::Activation::kSwish};
  diffcore::Vector params;
  simenv::CommandLimits limits;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  Eigen::VectorXd obs_mean = Eigen::VectorXd::Zero(kObservationDim);
  Eigen::VectorXd obs_std = Eigen::VectorXd::Ones(kObservationDim);
};

// (obs - obs_mean) / obs_std row by row.
RowMatrix normalize_observations(const Policy& policy, const RowMatrix& obs);

Policy init_policy(const SacConfig& cfg, const simenv::CommandLimits& limits, Rng& rng);

// Deterministic action limits * tanh(mean).
Action policy_act(const Policy& policy, const Observation& obs);

struct SampledActions {
  RowMatrix action;    // B x |A|, within limits
  Eigen::VectorXd log_prob;
};

// Stochastic actions for a batch of raw observations, one row each.
SampledActions policy_sample(const Policy& policy, const RowMatrix& obs, Rng& rng);

// Log-density of the squashed Gaussian for a given pre-activation. Exposed
// for tests.
double squashed_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, const Eigen::VectorXd& u,
                         const simenv::CommandLimits& limits);

void save_policy(const std::string& dir, const Policy& policy, const nlohmann::json& meta = nlohmann::json::object());
Policy load_policy(const std::string& dir);

struct SacProgress {
  std::size_t env_steps = 0;
  std::size_t updates = 0;
  std::size_t episodes = 0;
  double mean_episode_return = 0.0;  // over episodes finished in the last round
  double mean_final_distance = 0.0;
  double alpha = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

struct SacResult {
  Policy policy;
  std::vector<SacProgress> log;  // one entry per round
};

// Critic loss went non-finite. Holds the last policy with finite parameters.
class SacDivergence : public NumericalError {
 public:
  SacDivergence(const std::string& what, Policy checkpoint)
      : NumericalError("sac_train", what), checkpoint_(std::move(checkpoint)) {}
  const Policy& checkpoint() const { return checkpoint_; }

 private:
  Policy checkpoint_;
};

using SacCallback = std::function<void(const SacProgress&)>;

SacResult sac_train(const EnvFactory& env_factory, const SacConfig& cfg, const simenv::CommandLimits& limits,
                    std::uint64_t seed, const SacCallback& on_round = {});

struct EvalResult {
  double success_rate = 0.0;
  double mean_final_distance = 0.0;
  double mean_return = 0.0;
  std::vector<double> final_distances;
};

// Deterministic-action rollouts of `episodes` episodes in a fresh
// environment built from (index 0, seed); initial states and goals are drawn
// from the same seed. Success means the final ee-goal distance is at most
// `success_radius`.
EvalResult evaluate(const Policy& policy, const EnvFactory& env_factory, std::size_t episodes,
                    double success_radius, std::uint64_t seed);

}  // namespace mblab::policy
