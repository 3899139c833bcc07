#include "mblab/kinematics/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mblab/core/dataset_csv.hpp"

namespace mblab::kinematics {

std::array<double, kNumParams> KinematicParams::to_array() const {
  std::array<double, kNumParams> out{};
  std::copy(alpha.begin(), alpha.end(), out.begin());
  std::copy(beta.begin(), beta.end(), out.begin() + 6);
  std::copy(gamma.begin(), gamma.end(), out.begin() + 18);
  return out;
}

KinematicParams KinematicParams::from_array(std::span<const double, kNumParams> v) {
  KinematicParams p;
  std::copy(v.begin(), v.begin() + 6, p.alpha.begin());
  std::copy(v.begin() + 6, v.begin() + 18, p.beta.begin());
  std::copy(v.begin() + 18, v.end(), p.gamma.begin());
  return p;
}

bool KinematicParams::is_valid() const {
  for (double a : alpha) {
    if (!std::isfinite(a) || a < 0.0 || a >= 1.0) return false;
  }
  for (double b : beta) {
    if (!std::isfinite(b)) return false;
  }
  for (double g : gamma) {
    if (!std::isfinite(g) || g <= 0.0) return false;
  }
  return true;
}

ParamPrior ParamPrior::defaults() {
  ParamPrior prior;
  for (std::size_t i = 0; i < 6; ++i) {
    prior.lower[i] = 0.1;
    prior.upper[i] = 0.95;
    prior.lower[18 + i] = 0.7;
    prior.upper[18 + i] = 1.3;
  }
  for (std::size_t i = 0; i < 12; ++i) {
    // beta 1-3 and 7-9 are velocity biases, 4-6 and 10-12 position biases.
    const bool velocity = (i % 6) < 3;
    prior.lower[6 + i] = velocity ? -0.05 : -0.01;
    prior.upper[6 + i] = velocity ? 0.05 : 0.01;
  }
  return prior;
}

ParamPrior ParamPrior::degenerate(const KinematicParams& at) {
  ParamPrior prior;
  prior.lower = at.to_array();
  prior.upper = prior.lower;
  return prior;
}

void ParamPrior::validate() const {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (!(lower[i] <= upper[i])) {
      throw std::invalid_argument("ParamPrior: lower > upper at index " + std::to_string(i));
    }
  }
  if (!KinematicParams::from_array(lower).is_valid() || !KinematicParams::from_array(upper).is_valid()) {
    throw std::invalid_argument("ParamPrior: bounds violate parameter constraints");
  }
}

KinematicParams ParamPrior::project(const KinematicParams& p) const {
  auto v = p.to_array();
  for (std::size_t i = 0; i < kNumParams; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
  return KinematicParams::from_array(v);
}

bool ParamPrior::contains(const KinematicParams& p) const {
  const auto v = p.to_array();
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (v[i] < lower[i] || v[i] > upper[i]) return false;
  }
  return true;
}

KinematicParams ParamPrior::midpoint() const {
  std::array<double, kNumParams> v{};
  for (std::size_t i = 0; i < kNumParams; ++i) v[i] = 0.5 * (lower[i] + upper[i]);
  return KinematicParams::from_array(v);
}

WorldAction rotate_to_world(const Action& u, double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("rotate_to_world: non-finite yaw");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const auto rot = [c, s](const Vec3& v) -> Vec3 {
    return {c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]};
  };
  return {rot(u.base), rot(u.ee)};
}

Vec3 induced_velocity(const RobotState& s, double omega_next) {
  const double dx = s.p_ee[0] - s.p_base[0];
  const double dy = s.p_ee[1] - s.p_base[1];
  const double d = std::hypot(dx, dy);
  if (d == 0.0) return {0.0, 0.0, 0.0};
  const double phi = std::atan2(dy, dx);
  return {-omega_next * d * std::sin(phi), omega_next * d * std::cos(phi), 0.0};
}

RobotState step_kinematic(const RobotState& s, const Action& u, const KinematicParams& phi,
                          double dt) {
  return step_kinematic(s, u, phi, dt, 0.0);
}

RobotState step_kinematic(const RobotState& s, const Action& u, const KinematicParams& phi,
                          double dt, double drag) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_kinematic: dt must be positive");
  const WorldAction uw = rotate_to_world(u, s.theta());
  const auto apply_drag = [drag](double v) { return drag == 0.0 ? v : v - drag * v * std::abs(v); };

  RobotState next;
  for (std::size_t i = 0; i < 3; ++i) {
    const double a = phi.alpha[i];
    next.v_base[i] = apply_drag(a * s.v_base[i] + (1.0 - a) * uw.base[i] + phi.beta[i]);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    next.p_base[i] = s.p_base[i] + dt * phi.gamma[i] * next.v_base[i] + phi.beta[3 + i];
  }
  next.p_base[2] = wrap_angle(next.p_base[2]);

  const Vec3 ind = induced_velocity(s, next.v_base[2]);
  constexpr std::array<double, 3> kCoupling = {1.0, 1.0, 0.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const double a = phi.alpha[3 + i];
    const double v = a * s.v_ee[i] + (1.0 - a) * uw.ee[i] + phi.beta[6 + i] +
                     kCoupling[i] * next.v_base[i] + ind[i];
    next.v_ee[i] = apply_drag(v);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    next.p_ee[i] = s.p_ee[i] + dt * phi.gamma[3 + i] * next.v_ee[i] + phi.beta[9 + i];
  }
  return next;
}

EncodedState predict_encoded_delta(const RobotState& s, const Action& u, const KinematicParams& phi,
                                   double dt) {
  const EncodedState a = encode_state(s);
  const EncodedState b = encode_state(step_kinematic(s, u, phi, dt));
  EncodedState d{};
  for (std::size_t i = 0; i < kEncodedDim; ++i) d[i] = b[i] - a[i];
  return d;
}

KinematicParams sample_params(const ParamPrior& prior, Rng& rng) {
  std::array<double, kNumParams> v{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    v[i] = prior.lower[i] == prior.upper[i] ? prior.lower[i] : uniform(rng, prior.lower[i], prior.upper[i]);
  }
  return KinematicParams::from_array(v);
}

KinematicParams sample_params(const ParamPrior& prior, std::uint64_t seed) {
  Rng rng = make_rng(seed, {tag("kinematic_params")});
  return sample_params(prior, rng);
}

void write_params(std::ostream& out, const KinematicParams& p) {
  out << "# kinematic parameters: alpha 1-6, beta 1-12, gamma 1-6\n";
  const auto v = p.to_array();
  for (std::size_t i = 0; i < kNumParams; ++i) out << format_double(v[i]) << '\n';
}

KinematicParams read_params(std::istream& in) {
  std::array<double, kNumParams> v{};
  std::size_t count = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      if (count == kNumParams) throw std::runtime_error("parameter file: more than 24 values");
      v[count++] = parse_double(tok);
    }
  }
  if (count != kNumParams) {
    throw std::runtime_error("parameter file: expected 24 values, got " + std::to_string(count));
  }
  return KinematicParams::from_array(v);
}

void save_params(const std::string& path, const KinematicParams& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_params(out, p);
}

KinematicParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_params(in);
}

}  // namespace mblab::kinematics
