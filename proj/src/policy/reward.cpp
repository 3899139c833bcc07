#include "mblab/policy/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace mblab::policy {

double sigmoid_ma(double x, double m, double a) {
  const double z = x / m * std::sqrt(1.0 / a - 1.0);
  return 1.0 / (z * z + 1.0);
}

void RewardConfig::validate() const {
  if (!(b > 0.0 && m_state > 0.0 && l_arm > 0.0 && m_eb > 0.0)) {
    throw std::invalid_argument("reward config: bounds and margins must be positive");
  }
  if (!(a_state > 0.0 && a_state < 1.0 && a_eb > 0.0 && a_eb < 1.0)) {
    throw std::invalid_argument("reward config: sigmoid values must lie in (0, 1)");
  }
  if (!(lambda_base >= 0.0 && lambda_ee >= 0.0 && w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0)) {
    throw std::invalid_argument("reward config: weights must be non-negative");
  }
}

double ee_goal_distance(const RobotState& s, const Goal& g) {
  return std::sqrt((s.p_ee[0] - g.p[0]) * (s.p_ee[0] - g.p[0]) + (s.p_ee[1] - g.p[1]) * (s.p_ee[1] - g.p[1]) +
                   (s.p_ee[2] - g.p[2]) * (s.p_ee[2] - g.p[2]));
}

double ee_base_distance(const RobotState& s) { return std::hypot(s.p_ee[0] - s.p_base[0], s.p_ee[1] - s.p_base[1]); }

RewardTerms reward(const RobotState& s, const Goal& g, const Action& u, const RewardConfig& cfg) {
  RewardTerms r;
  r.d_ee_goal = ee_goal_distance(s, g);
  r.state = r.d_ee_goal <= cfg.b ? 1.0 : sigmoid_ma(r.d_ee_goal - cfg.b, cfg.m_state, cfg.a_state);
  const double d_eb = ee_base_distance(s);
  r.ee_base = d_eb <= cfg.l_arm ? 1.0 : sigmoid_ma(d_eb - cfg.l_arm, cfg.m_eb, cfg.a_eb);
  double ub = 0.0, ue = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    ub += u.base[i] * u.base[i];
    ue += u.ee[i] * u.ee[i];
  }
  r.action = -(cfg.lambda_base * ub + cfg.lambda_ee * ue);
  r.total = cfg.w1 * r.state + cfg.w2 * r.ee_base + cfg.w3 * r.action;
  return r;
}

}  // namespace mblab::policy
