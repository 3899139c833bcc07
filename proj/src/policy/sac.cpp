#include "mblab/policy/sac.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mblab/diffcore/adam.hpp"
#include "mblab/diffcore/tensor_io.hpp"

namespace mblab::policy {
namespace {

using diffcore::Mlp;
using diffcore::Vector;

constexpr std::size_t kA = kActionDim;
constexpr std::size_t kCriticIn = kObservationDim + kActionDim;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double parse_number(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("bad value for '" + key + "': " + value);
  }
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  if (v < 0.0 || v != std::floor(v)) throw std::invalid_argument("'" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

struct DoubleField {
  const char* name;
  double SacConfig::*ptr;
};
struct CountField {
  const char* name;
  std::size_t SacConfig::*ptr;
};

constexpr DoubleField kDoubleFields[] = {
    {"discount", &SacConfig::discount},       {"tau", &SacConfig::tau},
    {"lr_actor", &SacConfig::lr_actor},       {"lr_critic", &SacConfig::lr_critic},
    {"lr_alpha", &SacConfig::lr_alpha},       {"reward_scale", &SacConfig::reward_scale},
    {"max_grad_norm", &SacConfig::max_grad_norm}, {"init_log_alpha", &SacConfig::init_log_alpha},
    {"target_entropy", &SacConfig::target_entropy}, {"log_std_min", &SacConfig::log_std_min},
    {"log_std_max", &SacConfig::log_std_max},
};

constexpr CountField kCountFields[] = {
    {"episode_length", &SacConfig::episode_length},
    {"batch_size", &SacConfig::batch_size},
    {"replay_min", &SacConfig::replay_min},
    {"replay_max", &SacConfig::replay_max},
    {"updates_per_round", &SacConfig::updates_per_round},
    {"hidden", &SacConfig::hidden},
    {"hidden_layers", &SacConfig::hidden_layers},
    {"num_envs", &SacConfig::num_envs},
    {"steps_per_round", &SacConfig::steps_per_round},
    {"total_env_steps", &SacConfig::total_env_steps},
    {"eval_episodes", &SacConfig::eval_episodes},
    {"normalize_observations", &SacConfig::normalize_observations},
};

std::vector<std::size_t> layer_widths(std::size_t in, const SacConfig& cfg, std::size_t out) {
  std::vector<std::size_t> w{in};
  for (std::size_t i = 0; i < cfg.hidden_layers; ++i) w.push_back(cfg.hidden);
  w.push_back(out);
  return w;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

double squash_log_std(double raw, double lo, double hi) { return lo + 0.5 * (hi - lo) * (std::tanh(raw) + 1.0); }

double log_limits_sum(const simenv::CommandLimits& limits) {
  double s = 0.0;
  for (double l : limits.max_abs) s += std::log(l);
  return s;
}

RowMatrix concat_cols(const RowMatrix& a, const RowMatrix& b) {
  RowMatrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// Pre-activations and log-densities for a batch, keeping what the actor
// gradient needs.
struct ActorSample {
  RowMatrix eps, u, log_std, action;
  Eigen::VectorXd log_prob;
};

ActorSample sample_from_output(const Policy& p, const RowMatrix& out, Rng& rng) {
  const Eigen::Index b = out.rows();
  const auto a = static_cast<Eigen::Index>(kA);
  ActorSample s;
  s.eps.resize(b, a);
  s.u.resize(b, a);
  s.log_std.resize(b, a);
  s.action.resize(b, a);
  s.log_prob.resize(b);
  const double c = 0.5 * std::log(2.0 * std::numbers::pi);
  const double lsum = log_limits_sum(p.limits);
  for (Eigen::Index i = 0; i < b; ++i) {
    double lp = -lsum;
    for (Eigen::Index j = 0; j < a; ++j) {
      const double e = standard_normal(rng);
      const double ls = squash_log_std(out(i, a + j), p.log_std_min, p.log_std_max);
      const double u = out(i, j) + std::exp(ls) * e;
      s.eps(i, j) = e;
      s.log_std(i, j) = ls;
      s.u(i, j) = u;
      s.action(i, j) = p.limits.max_abs[static_cast<std::size_t>(j)] * std::tanh(u);
      lp += -0.5 * e * e - ls - c - log_one_minus_tanh_sq(u);
    }
    s.log_prob[i] = lp;
  }
  return s;
}

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity)
      : obs_(capacity, kObservationDim), act_(capacity, kA), next_(capacity, kObservationDim),
        rew_(static_cast<Eigen::Index>(capacity)), done_(static_cast<Eigen::Index>(capacity)), cap_(capacity) {}

  void add(const Observation& o, const Action& a, double r, const Observation& o2, bool done) {
    const auto i = static_cast<Eigen::Index>(head_);
    const auto av = a.to_array();
    for (std::size_t j = 0; j < kObservationDim; ++j) {
      obs_(i, static_cast<Eigen::Index>(j)) = o[j];
      next_(i, static_cast<Eigen::Index>(j)) = o2[j];
    }
    for (std::size_t j = 0; j < kA; ++j) act_(i, static_cast<Eigen::Index>(j)) = av[j];
    rew_[i] = r;
    done_[i] = done ? 1.0 : 0.0;
    head_ = (head_ + 1) % cap_;
    size_ = std::min(size_ + 1, cap_);
  }

  std::size_t size() const { return size_; }

  void sample(std::size_t n, Rng& rng, RowMatrix& o, RowMatrix& a, Eigen::VectorXd& r, RowMatrix& o2,
              Eigen::VectorXd& d) const {
    const auto b = static_cast<Eigen::Index>(n);
    o.resize(b, kObservationDim);
    a.resize(b, kA);
    o2.resize(b, kObservationDim);
    r.resize(b);
    d.resize(b);
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    for (Eigen::Index i = 0; i < b; ++i) {
      const auto k = static_cast<Eigen::Index>(pick(rng));
      o.row(i) = obs_.row(k);
      a.row(i) = act_.row(k);
      o2.row(i) = next_.row(k);
      r[i] = rew_[k];
      d[i] = done_[k];
    }
  }

 private:
  RowMatrix obs_, act_, next_;
  Eigen::VectorXd rew_, done_;
  std::size_t cap_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

// Welford accumulator.
struct ObsStats {
  double count = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kObservationDim);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(kObservationDim);

  void add(const Observation& o) {
    count += 1.0;
    for (std::size_t j = 0; j < kObservationDim; ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      const double d = o[j] - mean[k];
      mean[k] += d / count;
      m2[k] += d * (o[j] - mean[k]);
    }
  }
  Eigen::VectorXd std() const {
    if (count < 2.0) return Eigen::VectorXd::Ones(kObservationDim);
    return (m2 / count).cwiseSqrt().cwiseMax(1e-3);
  }
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

class Learner {
 public:
  Learner(const SacConfig& cfg, const simenv::CommandLimits& limits, std::uint64_t seed)
      : cfg_(cfg), critic_(layer_widths(kCriticIn, cfg, 1), diffcore::Activation::kSwish) {
    Rng init_rng = make_rng(seed, {tag("sac_init")});
    policy_ = init_policy(cfg, limits, init_rng);
    for (auto& q : q_) q = critic_.init(init_rng);
    for (std::size_t i = 0; i < 2; ++i) {
      q_target_[i] = q_[i];
      q_opt_[i] = diffcore::AdamState(q_[i].size());
    }
    actor_opt_ = diffcore::AdamState(policy_.params.size());
    log_alpha_ = Vector::Constant(1, cfg.init_log_alpha);
    alpha_opt_ = diffcore::AdamState(1);
  }

  Policy& policy() { return policy_; }
  double alpha() const { return std::exp(log_alpha_[0]); }

  UpdateStats update(const ReplayBuffer& replay, Rng& rng) {
    RowMatrix o, a, o2;
    Eigen::VectorXd r, d;
    replay.sample(cfg_.batch_size, rng, o, a, r, o2, d);
    o = normalize_observations(policy_, o);
    o2 = normalize_observations(policy_, o2);
    const auto b = static_cast<double>(cfg_.batch_size);
    const double alpha = this->alpha();
    UpdateStats st;

    // Critic targets.
    RowMatrix out2;
    policy_.actor.forward(policy_.params, o2, out2);
    const ActorSample next = sample_from_output(policy_, out2, rng);
    const RowMatrix x2 = concat_cols(o2, next.action);
    const RowMatrix q1t = critic_.forward(q_target_[0], x2);
    const RowMatrix q2t = critic_.forward(q_target_[1], x2);
    Eigen::VectorXd y(o.rows());
    for (Eigen::Index i = 0; i < o.rows(); ++i) {
      const double v = std::min(q1t(i, 0), q2t(i, 0)) - alpha * next.log_prob[i];
      y[i] = cfg_.reward_scale * r[i] + cfg_.discount * (1.0 - d[i]) * v;
    }

    const RowMatrix x = concat_cols(o, a);
    diffcore::AdamConfig copt{cfg_.lr_critic};
    for (std::size_t k = 0; k < 2; ++k) {
      RowMatrix q;
      critic_.forward(q_[k], x, q, &tape_);
      RowMatrix dy = (q.col(0) - y) / b;
      st.critic_loss += 0.5 * (q.col(0) - y).squaredNorm() / b;
      grad_.setZero(q_[k].size());
      critic_.backward(q_[k], tape_, dy, grad_);
      if (!std::isfinite(st.critic_loss) || !grad_.allFinite()) {
        throw SacDivergence("critic loss is not finite", policy_);
      }
      diffcore::clip_by_global_norm(grad_, cfg_.max_grad_norm);
      diffcore::adam_step(q_opt_[k], q_[k], grad_, copt);
    }

    // Actor.
    RowMatrix out;
    policy_.actor.forward(policy_.params, o, out, &actor_tape_);
    const ActorSample cur = sample_from_output(policy_, out, rng);
    const RowMatrix xa = concat_cols(o, cur.action);
    RowMatrix q1, q2;
    critic_.forward(q_[0], xa, q1, &tape_);
    critic_.forward(q_[1], xa, q2, &tape2_);
    RowMatrix m1 = RowMatrix::Zero(o.rows(), 1), m2 = RowMatrix::Zero(o.rows(), 1);
    for (Eigen::Index i = 0; i < o.rows(); ++i) {
      if (q1(i, 0) <= q2(i, 0)) {
        m1(i, 0) = 1.0;
        st.actor_loss += (alpha * cur.log_prob[i] - q1(i, 0)) / b;
      } else {
        m2(i, 0) = 1.0;
        st.actor_loss += (alpha * cur.log_prob[i] - q2(i, 0)) / b;
      }
    }
    RowMatrix dx1, dx2;
    grad_.setZero(q_[0].size());
    critic_.backward(q_[0], tape_, m1, grad_, &dx1);
    critic_.backward(q_[1], tape2_, m2, grad_, &dx2);
    const auto ad = static_cast<Eigen::Index>(kA);
    RowMatrix dout(o.rows(), 2 * ad);
    const double half_range = 0.5 * (policy_.log_std_max - policy_.log_std_min);
    for (Eigen::Index i = 0; i < o.rows(); ++i) {
      for (Eigen::Index j = 0; j < ad; ++j) {
        const double th = std::tanh(cur.u(i, j));
        const double qa = dx1(i, kObservationDim + j) + dx2(i, kObservationDim + j);
        const double lim = policy_.limits.max_abs[static_cast<std::size_t>(j)];
        const double g = alpha * 2.0 * th - qa * lim * (1.0 - th * th);
        const double sigma = std::exp(cur.log_std(i, j));
        const double tr = std::tanh(out(i, ad + j));
        dout(i, j) = g / b;
        dout(i, ad + j) = (g * sigma * cur.eps(i, j) - alpha) * half_range * (1.0 - tr * tr) / b;
      }
    }
    grad_.setZero(policy_.params.size());
    policy_.actor.backward(policy_.params, actor_tape_, dout, grad_);
    if (grad_.allFinite()) {
      diffcore::clip_by_global_norm(grad_, cfg_.max_grad_norm);
      diffcore::adam_step(actor_opt_, policy_.params, grad_, diffcore::AdamConfig{cfg_.lr_actor});
    }

    // Temperature.
    Vector ga(1);
    ga[0] = -(cur.log_prob.array() + cfg_.effective_target_entropy()).mean();
    if (ga.allFinite()) diffcore::adam_step(alpha_opt_, log_alpha_, ga, diffcore::AdamConfig{cfg_.lr_alpha});

    for (std::size_t k = 0; k < 2; ++k) q_target_[k] = (1.0 - cfg_.tau) * q_target_[k] + cfg_.tau * q_[k];
    return st;
  }

 private:
  const SacConfig& cfg_;
  Mlp critic_;
  Policy policy_;
  Vector q_[2], q_target_[2];
  diffcore::AdamState q_opt_[2], actor_opt_, alpha_opt_;
  Vector log_alpha_;
  Mlp::Tape tape_, tape2_, actor_tape_;
  Vector grad_;
};

Action row_action(const RowMatrix& m, Eigen::Index i) {
  std::array<double, kA> v{};
  for (std::size_t j = 0; j < kA; ++j) v[j] = m(i, static_cast<Eigen::Index>(j));
  return Action::from_array(v);
}

}  // namespace

double SacConfig::effective_target_entropy() const {
  return target_entropy == 0.0 ? -static_cast<double>(kActionDim) : target_entropy;
}

void SacConfig::validate() const {
  if (episode_length == 0 || batch_size == 0 || replay_max == 0 || hidden == 0 || num_envs == 0 ||
      steps_per_round == 0) {
    throw std::invalid_argument("sac config: sizes must be positive");
  }
  if (replay_min > replay_max) throw std::invalid_argument("sac config: replay_min > replay_max");
  if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("sac config: discount must lie in (0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("sac config: tau must lie in (0, 1]");
  if (!(lr_actor > 0.0 && lr_critic > 0.0 && lr_alpha > 0.0 && reward_scale > 0.0 && max_grad_norm > 0.0)) {
    throw std::invalid_argument("sac config: rates and scales must be positive");
  }
  if (!(log_std_min < log_std_max)) throw std::invalid_argument("sac config: log_std_min >= log_std_max");
}

SacConfig parse_sac_config(std::istream& in) {
  SacConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "sac config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    try {
      for (const auto& f : kDoubleFields) {
        if (key == f.name) {
          cfg.*f.ptr = parse_number(key, value);
          found = true;
        }
      }
      for (const auto& f : kCountFields) {
        if (key == f.name) {
          cfg.*f.ptr = parse_count(key, value);
          found = true;
        }
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
    if (!found) throw std::invalid_argument(where + "unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SacConfig load_sac_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sac config " + path);
  return parse_sac_config(in);
}

void write_sac_config(std::ostream& out, const SacConfig& cfg) {
  std::ostringstream s;
  s.precision(17);
  for (const auto& f : kCountFields) s << f.name << " = " << cfg.*f.ptr << '\n';
  for (const auto& f : kDoubleFields) s << f.name << " = " << cfg.*f.ptr << '\n';
  out << s.str();
}

Policy init_policy(const SacConfig& cfg, const simenv::CommandLimits& limits, Rng& rng) {
  cfg.validate();
  Policy p;
  p.actor = Mlp(layer_widths(kObservationDim, cfg, 2 * kA), diffcore::Activation::kSwish);
  p.params = p.actor.init(rng);
  p.limits = limits;
  p.log_std_min = cfg.log_std_min;
  p.log_std_max = cfg.log_std_max;
  return p;
}

RowMatrix normalize_observations(const Policy& policy, const RowMatrix& obs) {
  return (obs.rowwise() - policy.obs_mean.transpose()).array().rowwise() / policy.obs_std.transpose().array();
}

Action policy_act(const Policy& policy, const Observation& obs) {
  RowMatrix x(1, static_cast<Eigen::Index>(kObservationDim));
  for (std::size_t j = 0; j < kObservationDim; ++j) x(0, static_cast<Eigen::Index>(j)) = obs[j];
  const RowMatrix out = policy.actor.forward(policy.params, normalize_observations(policy, x));
  std::array<double, kA> a{};
  for (std::size_t j = 0; j < kA; ++j) {
    a[j] = policy.limits.max_abs[j] * std::tanh(out(0, static_cast<Eigen::Index>(j)));
  }
  return Action::from_array(a);
}

SampledActions policy_sample(const Policy& policy, const RowMatrix& obs, Rng& rng) {
  const RowMatrix out = policy.actor.forward(policy.params, normalize_observations(policy, obs));
  ActorSample s = sample_from_output(policy, out, rng);
  return {std::move(s.action), std::move(s.log_prob)};
}

double squashed_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, const Eigen::VectorXd& u,
                         const simenv::CommandLimits& limits) {
  double lp = -log_limits_sum(limits);
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    const double e = (u[j] - mean[j]) / std::exp(log_std[j]);
    lp += -0.5 * e * e - log_std[j] - 0.5 * std::log(2.0 * std::numbers::pi) - log_one_minus_tanh_sq(u[j]);
  }
  return lp;
}

void save_policy(const std::string& dir, const Policy& policy, const nlohmann::json& meta) {
  std::filesystem::create_directories(dir);
  diffcore::TensorFile f;
  f.meta = meta;
  f.meta["kind"] = "sac_policy";
  f.meta["widths"] = policy.actor.widths();
  f.meta["hidden_activation"] = diffcore::to_string(policy.actor.hidden_activation());
  f.meta["limits"] = policy.limits.max_abs;
  f.meta["log_std_min"] = policy.log_std_min;
  f.meta["log_std_max"] = policy.log_std_max;
  f.tensors.push_back(diffcore::NamedTensor::from_vector("actor", policy.params));
  f.tensors.push_back(diffcore::NamedTensor::from_vector("obs_mean", policy.obs_mean));
  f.tensors.push_back(diffcore::NamedTensor::from_vector("obs_std", policy.obs_std));
  diffcore::save_tensors((std::filesystem::path(dir) / "policy.json").string(), f);
}

Policy load_policy(const std::string& dir) {
  const auto f = diffcore::load_tensors((std::filesystem::path(dir) / "policy.json").string());
  if (f.meta.value("kind", "") != "sac_policy") throw std::runtime_error("not a policy directory: " + dir);
  Policy p;
  p.actor = Mlp(f.meta.at("widths").get<std::vector<std::size_t>>(),
                diffcore::activation_from_string(f.meta.at("hidden_activation").get<std::string>()));
  if (p.actor.input_dim() != kObservationDim || p.actor.output_dim() != 2 * kA) {
    throw std::runtime_error("policy has the wrong input or output size");
  }
  p.params = f.at("actor").to_vector();
  if (static_cast<std::size_t>(p.params.size()) != p.actor.num_params()) {
    throw std::runtime_error("policy parameter count mismatch");
  }
  p.obs_mean = f.at("obs_mean").to_vector();
  p.obs_std = f.at("obs_std").to_vector();
  if (p.obs_mean.size() != static_cast<Eigen::Index>(kObservationDim) || p.obs_mean.size() != p.obs_std.size() ||
      !(p.obs_std.array() > 0.0).all()) {
    throw std::runtime_error("policy observation normalizer is malformed");
  }
  p.limits.max_abs = f.meta.at("limits").get<std::array<double, kA>>();
  p.log_std_min = f.meta.at("log_std_min").get<double>();
  p.log_std_max = f.meta.at("log_std_max").get<double>();
  return p;
}

SacResult sac_train(const EnvFactory& env_factory, const SacConfig& cfg, const simenv::CommandLimits& limits,
                    std::uint64_t seed, const SacCallback& on_round) {
  cfg.validate();
  Learner learner(cfg, limits, seed);
  ReplayBuffer replay(cfg.replay_max);
  Rng act_rng = make_rng(seed, {tag("sac_act")});
  Rng batch_rng = make_rng(seed, {tag("sac_batch")});

  const std::size_t n_env = cfg.num_envs;
  std::vector<std::unique_ptr<Env>> envs;
  std::vector<Rng> reset_rngs;
  std::vector<Observation> obs(n_env);
  std::vector<double> returns(n_env, 0.0);
  const std::uint64_t env_seed = derive_seed(seed, {tag("sac_env")});
  for (std::size_t i = 0; i < n_env; ++i) {
    envs.push_back(env_factory(i, env_seed));
    reset_rngs.push_back(make_rng(seed, {tag("sac_reset"), i}));
    obs[i] = envs[i]->reset(reset_rngs[i]);
  }

  ObsStats stats;
  auto observe = [&](const Observation& o) {
    if (cfg.normalize_observations == 0) return;
    stats.add(o);
    learner.policy().obs_mean = stats.mean;
    learner.policy().obs_std = stats.std();
  };
  for (const auto& o : obs) observe(o);

  SacResult result;
  SacProgress prog;
  RowMatrix batch_obs(static_cast<Eigen::Index>(n_env), kObservationDim);
  while (prog.env_steps < cfg.total_env_steps) {
    double ret_sum = 0.0, dist_sum = 0.0;
    std::size_t finished = 0;
    for (std::size_t s = 0; s < cfg.steps_per_round && prog.env_steps < cfg.total_env_steps; ++s) {
      RowMatrix actions(static_cast<Eigen::Index>(n_env), kA);
      if (replay.size() < cfg.replay_min) {
        for (Eigen::Index i = 0; i < actions.rows(); ++i) {
          for (std::size_t j = 0; j < kA; ++j) {
            actions(i, static_cast<Eigen::Index>(j)) = uniform(act_rng, -limits.max_abs[j], limits.max_abs[j]);
          }
        }
      } else {
        for (std::size_t i = 0; i < n_env; ++i) {
          for (std::size_t j = 0; j < kObservationDim; ++j) {
            batch_obs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = obs[i][j];
          }
        }
        actions = policy_sample(learner.policy(), batch_obs, act_rng).action;
      }
      for (std::size_t i = 0; i < n_env; ++i) {
        const Action a = row_action(actions, static_cast<Eigen::Index>(i));
        const StepResult r = envs[i]->step(a);
        replay.add(obs[i], a, r.reward, r.obs, r.terminated);
        returns[i] += r.reward;
        obs[i] = r.obs;
        observe(r.obs);
        if (r.terminated || r.truncated) {
          ret_sum += returns[i];
          dist_sum += ee_goal_distance(envs[i]->state(), envs[i]->goal());
          ++finished;
          ++prog.episodes;
          returns[i] = 0.0;
          obs[i] = envs[i]->reset(reset_rngs[i]);
          observe(obs[i]);
        }
      }
      prog.env_steps += n_env;
    }
    double closs = 0.0, aloss = 0.0;
    std::size_t done_updates = 0;
    if (replay.size() >= cfg.replay_min && replay.size() > 0) {
      for (std::size_t k = 0; k < cfg.updates_per_round; ++k) {
        const UpdateStats st = learner.update(replay, batch_rng);
        closs += st.critic_loss;
        aloss += st.actor_loss;
        ++done_updates;
      }
    }
    prog.updates += done_updates;
    prog.mean_episode_return = finished ? ret_sum / static_cast<double>(finished) : 0.0;
    prog.mean_final_distance = finished ? dist_sum / static_cast<double>(finished) : 0.0;
    prog.critic_loss = done_updates ? closs / static_cast<double>(done_updates) : 0.0;
    prog.actor_loss = done_updates ? aloss / static_cast<double>(done_updates) : 0.0;
    prog.alpha = learner.alpha();
    result.log.push_back(prog);
    if (on_round) on_round(prog);
  }
  result.policy = learner.policy();
  return result;
}

EvalResult evaluate(const Policy& policy, const EnvFactory& env_factory, std::size_t episodes,
                    double success_radius, std::uint64_t seed) {
  const auto env = env_factory(0, seed);
  Rng rng = make_rng(seed, {tag("sac_eval")});
  EvalResult res;
  std::size_t hits = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    Observation o = env->reset(rng);
    double ret = 0.0;
    for (;;) {
      const StepResult r = env->step(policy_act(policy, o));
      ret += r.reward;
      o = r.obs;
      if (r.terminated || r.truncated) break;
    }
    const double d = ee_goal_distance(env->state(), env->goal());
    res.final_distances.push_back(d);
    res.mean_final_distance += d;
    res.mean_return += ret;
    if (d <= success_radius) ++hits;
  }
  if (episodes > 0) {
    res.success_rate = static_cast<double>(hits) / static_cast<double>(episodes);
    res.mean_final_distance /= static_cast<double>(episodes);
    res.mean_return /= static_cast<double>(episodes);
  }
  return res;
}

}  // namespace mblab::policy
