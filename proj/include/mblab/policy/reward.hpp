#pragma once

// Goal-reaching reward for the end-effector.
//
//   r = w1 r_state + w2 r_ee_base + w3 r_action
//   r_state   = 1 if d_ee_goal <= b, else sigmoid_ma(d_ee_goal - b, m_state, a_state)
//   r_ee_base = 1 if d_ee_base <= l_arm, else sigmoid_ma(d_ee_base - l_arm, m_eb, a_eb)
//   r_action  = -(lambda_base |u_base|^2 + lambda_ee |u_ee|^2)
//
// d_ee_base is the planar distance between the ee and the base axis.

#include "mblab/core/types.hpp"

namespace mblab::policy {

// ((x / m * sqrt(1/a - 1))^2 + 1)^-1: 1 at x = 0 and a at x = m.
double sigmoid_ma(double x, double m, double a);

struct RewardConfig {
  double b = 0.15;
  double m_state = 1.5;
  double a_state = 0.1;
  double l_arm = 1.3;
  double m_eb = 1.3;
  double a_eb = 0.1;
  double lambda_base = 2.0;
  double lambda_ee = 0.5;
  double w1 = 1.5;
  double w2 = 0.01;
  double w3 = 0.1;

  void validate() const;
};

struct RewardTerms {
  double state = 0.0;
  double ee_base = 0.0;
  double action = 0.0;
  double total = 0.0;
  double d_ee_goal = 0.0;
};

double ee_goal_distance(const RobotState& s, const Goal& g);
double ee_base_distance(const RobotState& s);

// Scores the state reached after applying u.
RewardTerms reward(const RobotState& s, const Goal& g, const Action& u, const RewardConfig& cfg);

}  // namespace mblab::policy
