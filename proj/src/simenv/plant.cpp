#include "mblab/simenv/plant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mblab/core/dataset_csv.hpp"

namespace mblab::simenv {
namespace {

std::vector<double> parse_values(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok));
  return out;
}

template <std::size_t N>
std::array<double, N> parse_array(const std::string& key, const std::string& text) {
  const auto v = parse_values(text);
  if (v.size() != N) {
    throw std::invalid_argument("plant config: " + key + " needs " + std::to_string(N) + " values, got " +
                                std::to_string(v.size()));
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

double parse_scalar(const std::string& key, const std::string& text) {
  return parse_array<1>(key, text)[0];
}

template <std::size_t N>
void write_array(std::ostream& out, const char* key, const std::array<double, N>& v) {
  out << key << " =";
  for (std::size_t i = 0; i < N; ++i) out << (i ? ", " : " ") << format_double(v[i]);
  out << '\n';
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Action CommandLimits::clip(const Action& u) const {
  auto a = u.to_array();
  for (std::size_t i = 0; i < kActionDim; ++i) a[i] = std::clamp(a[i], -max_abs[i], max_abs[i]);
  return Action::from_array(a);
}

bool CommandLimits::contains(const Action& u) const {
  const auto a = u.to_array();
  for (std::size_t i = 0; i < kActionDim; ++i) {
    if (!(std::abs(a[i]) <= max_abs[i])) return false;
  }
  return true;
}

kinematics::KinematicParams PlantConfig::default_true_params() {
  kinematics::KinematicParams p;
  p.alpha = {0.88, 0.88, 0.85, 0.5, 0.5, 0.45};
  p.beta = {0.01, -0.01, 0.015, 0.002, -0.002, 0.0015, -0.01, 0.01, 0.008, 0.0015, -0.0015, 0.001};
  p.gamma = {1.15, 1.15, 1.1, 0.88, 0.88, 0.9};
  return p;
}

PlantConfig PlantConfig::defaults() {
  PlantConfig cfg;
  cfg.noise_std = {0.002, 0.002, 0.004, 0.01, 0.01, 0.02, 0.002, 0.002, 0.002, 0.01, 0.01, 0.01};
  cfg.drag_coeff = 0.01;
  cfg.arm_reach = 1.2;
  return cfg;
}

PlantConfig PlantConfig::ideal(const kinematics::KinematicParams& params) {
  PlantConfig cfg;
  cfg.true_params = params;
  cfg.delay_steps = 0;
  cfg.noise_std.fill(0.0);
  cfg.drag_coeff = 0.0;
  return cfg;
}

void PlantConfig::validate() const {
  if (!true_params.is_valid()) throw std::invalid_argument("plant config: invalid true_params");
  if (delay_steps < 0) throw std::invalid_argument("plant config: delay_steps < 0");
  if (!(dt > 0.0)) throw std::invalid_argument("plant config: dt must be positive");
  if (!(drag_coeff >= 0.0)) throw std::invalid_argument("plant config: drag_coeff < 0");
  for (double s : noise_std) {
    if (!(s >= 0.0)) throw std::invalid_argument("plant config: negative noise_std");
  }
  for (double m : command_limits.max_abs) {
    if (!(m > 0.0)) throw std::invalid_argument("plant config: command limits must be positive");
  }
  if (!(safety_bound > 0.0)) throw std::invalid_argument("plant config: safety_bound must be positive");
  if (!(arm_reach >= 0.0)) throw std::invalid_argument("plant config: arm_reach < 0");
  if (!(ee_z_min < ee_z_max)) throw std::invalid_argument("plant config: ee_z_min must be below ee_z_max");
}

PlantConfig parse_plant_config(std::istream& in) {
  PlantConfig cfg = PlantConfig::defaults();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("plant config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "true_params") {
        cfg.true_params = kinematics::KinematicParams::from_array(parse_array<kinematics::kNumParams>(key, value));
      } else if (key == "delay_steps") {
        const double d = parse_scalar(key, value);
        if (d != std::floor(d)) throw std::invalid_argument("delay_steps must be an integer");
        cfg.delay_steps = static_cast<int>(d);
      } else if (key == "noise_std") {
        cfg.noise_std = parse_array<kStateDim>(key, value);
      } else if (key == "drag_coeff") {
        cfg.drag_coeff = parse_scalar(key, value);
      } else if (key == "dt") {
        cfg.dt = parse_scalar(key, value);
      } else if (key == "command_limits") {
        cfg.command_limits.max_abs = parse_array<kActionDim>(key, value);
      } else if (key == "safety_bound") {
        cfg.safety_bound = parse_scalar(key, value);
      } else if (key == "arm_reach") {
        cfg.arm_reach = parse_scalar(key, value);
      } else if (key == "ee_z_min") {
        cfg.ee_z_min = parse_scalar(key, value);
      } else if (key == "ee_z_max") {
        cfg.ee_z_max = parse_scalar(key, value);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("plant config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

PlantConfig load_plant_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_plant_config(in);
}

void write_plant_config(std::ostream& out, const PlantConfig& cfg) {
  write_array(out, "true_params", cfg.true_params.to_array());
  out << "delay_steps = " << cfg.delay_steps << '\n';
  write_array(out, "noise_std", cfg.noise_std);
  out << "drag_coeff = " << format_double(cfg.drag_coeff) << '\n';
  out << "dt = " << format_double(cfg.dt) << '\n';
  write_array(out, "command_limits", cfg.command_limits.max_abs);
  out << "safety_bound = " << format_double(cfg.safety_bound) << '\n';
  out << "arm_reach = " << format_double(cfg.arm_reach) << '\n';
  out << "ee_z_min = " << format_double(cfg.ee_z_min) << '\n';
  out << "ee_z_max = " << format_double(cfg.ee_z_max) << '\n';
}

Plant::Plant(PlantConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(make_rng(seed, {tag("plant")})) {
  cfg_.validate();
  reset(RobotState{});
}

void Plant::reset(const RobotState& s) {
  state_ = s;
  state_.p_base[2] = wrap_angle(state_.p_base[2]);
  pending_.assign(static_cast<std::size_t>(cfg_.delay_steps), Action{});
}

const RobotState& Plant::step(const Action& u) {
  const Action clipped = cfg_.command_limits.clip(u);
  Action applied = clipped;
  if (!pending_.empty()) {
    applied = pending_.front();
    pending_.pop_front();
    pending_.push_back(clipped);
  }
  RobotState next = kinematics::step_kinematic(state_, applied, cfg_.true_params, cfg_.dt, cfg_.drag_coeff);
  if (cfg_.arm_reach > 0.0) limit_workspace(next);
  auto v = next.to_array();
  for (std::size_t i = 0; i < kStateDim; ++i) {
    if (cfg_.noise_std[i] > 0.0) v[i] += cfg_.noise_std[i] * normal_(rng_);
  }
  state_ = RobotState::from_array(v);
  state_.p_base[2] = wrap_angle(state_.p_base[2]);
  return state_;
}

void Plant::limit_workspace(RobotState& s) const {
  const double rx = s.p_ee[0] - s.p_base[0];
  const double ry = s.p_ee[1] - s.p_base[1];
  const double d = std::hypot(rx, ry);
  if (d > cfg_.arm_reach) {
    const double nx = rx / d, ny = ry / d;
    s.p_ee[0] = s.p_base[0] + cfg_.arm_reach * nx;
    s.p_ee[1] = s.p_base[1] + cfg_.arm_reach * ny;
    const double out = (s.v_ee[0] - s.v_base[0]) * nx + (s.v_ee[1] - s.v_base[1]) * ny;
    if (out > 0.0) {
      s.v_ee[0] -= out * nx;
      s.v_ee[1] -= out * ny;
    }
  }
  if (s.p_ee[2] > cfg_.ee_z_max) {
    s.p_ee[2] = cfg_.ee_z_max;
    s.v_ee[2] = std::min(s.v_ee[2], 0.0);
  } else if (s.p_ee[2] < cfg_.ee_z_min) {
    s.p_ee[2] = cfg_.ee_z_min;
    s.v_ee[2] = std::max(s.v_ee[2], 0.0);
  }
}

bool Plant::diverged() const {
  for (double x : state_.to_array()) {
    if (!std::isfinite(x) || std::abs(x) > cfg_.safety_bound) return true;
  }
  return false;
}

RobotState sample_initial_state(const InitialStateBox& box, Rng& rng) {
  RobotState s;
  s.p_base = {uniform(rng, -box.half_extent, box.half_extent), uniform(rng, -box.half_extent, box.half_extent),
              0.0};
  // Uniform on (-pi, pi].
  s.p_base[2] = std::numbers::pi - uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double r = uniform(rng, box.ee_radius_min, box.ee_radius_max);
  const double ang = uniform(rng, -std::numbers::pi, std::numbers::pi);
  s.p_ee = {s.p_base[0] + r * std::cos(ang), s.p_base[1] + r * std::sin(ang),
            uniform(rng, box.ee_height_min, box.ee_height_max)};
  return s;
}

std::vector<Action> excitation_policy(std::uint64_t seed, std::size_t horizon, const ExcitationConfig& cfg,
                                      const CommandLimits& limits) {
  if (horizon == 0) throw std::invalid_argument("excitation_policy: horizon must be >= 1");
  Rng rng = make_rng(seed, {tag("excitation")});
  std::normal_distribution<double> normal;
  std::vector<Action> out;
  out.reserve(horizon);
  if (!(cfg.smoothing >= 0.0 && cfg.smoothing < 1.0)) throw std::invalid_argument("excitation: smoothing must be in [0, 1)");
  std::array<double, kActionDim> o{}, u{};
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t i = 0; i < kActionDim; ++i) {
      const double xi = std::clamp(normal(rng), -2.0, 2.0);
      const double lim = limits.max_abs[i];
      o[i] = std::clamp((1.0 - cfg.reversion) * o[i] + cfg.step_scale * xi, -lim, lim);
      u[i] = std::clamp(cfg.smoothing * u[i] + (1.0 - cfg.smoothing) * o[i], -lim, lim);
    }
    out.push_back(Action::from_array(u));
  }
  return out;
}

Action centred_command(const Action& u, const RobotState& s, const ExcitationConfig& cfg, const CommandLimits& limits) {
  if (cfg.ee_centering == 0.0) return limits.clip(u);
  const double c = std::cos(s.theta()), sn = std::sin(s.theta());
  const double wx = s.p_ee[0] - s.p_base[0], wy = s.p_ee[1] - s.p_base[1];
  const Vec3 offset{c * wx + sn * wy, -sn * wx + c * wy, s.p_ee[2]};
  Action out = u;
  for (std::size_t i = 0; i < 3; ++i) out.ee[i] += cfg.ee_centering * (cfg.ee_nominal[i] - offset[i]);
  return limits.clip(out);
}

CollectResult collect_dataset(const PlantConfig& cfg, std::size_t n_episodes, std::size_t episode_len,
                              std::uint64_t seed, const ExcitationConfig& excitation,
                              const InitialStateBox& box) {
  cfg.validate();
  CollectResult result;
  result.transitions.reserve(n_episodes * episode_len);
  for (std::size_t ep = 0; ep < n_episodes; ++ep) {
    const std::uint64_t ep_seed = derive_seed(seed, {tag("episode"), ep});
    Rng init_rng = make_rng(ep_seed, {tag("initial_state")});
    Plant plant(cfg, derive_seed(ep_seed, {tag("plant")}));
    plant.reset(sample_initial_state(box, init_rng));
    const auto actions = excitation_policy(derive_seed(ep_seed, {tag("actions")}), episode_len, excitation,
                                           cfg.command_limits);
    for (std::size_t t = 0; t < episode_len; ++t) {
      const RobotState s = plant.state();
      const Action u = centred_command(actions[t], s, excitation, cfg.command_limits);
      plant.step(u);
      if (plant.diverged()) {
        result.truncated_episodes.push_back(static_cast<std::int64_t>(ep));
        break;
      }
      result.transitions.push_back(
          Transition{s, u, plant.state(), static_cast<std::int64_t>(ep), static_cast<std::int64_t>(t)});
    }
  }
  return result;
}

}  // namespace mblab::simenv
