#pragma once

// State, action and dataset types shared by every module.
//
// Layouts (all world frame W unless noted):
//   RobotState   [x_b, y_b, theta_b, vx_b, vy_b, omega_b, x_ee, y_ee, z_ee, vx_ee, vy_ee, vz_ee]
//   EncodedState [x_b, y_b, sin theta_b, cos theta_b, vx_b, vy_b, omega_b, x_ee, ..., vz_ee]
//   Action       [u_vx_b, u_vy_b, u_omega_b, u_vx_ee, u_vy_ee, u_vz_ee]   (body frame B)
//   model input  [EncodedState(s_t), u_{t-2}, u_{t-1}, u_t]               (31 columns)
//   model target EncodedState(s_{t+1}) - EncodedState(s_t)                (13 columns)

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mblab {

inline constexpr std::size_t kStateDim = 12;
inline constexpr std::size_t kEncodedDim = 13;
inline constexpr std::size_t kActionDim = 6;
inline constexpr std::size_t kHistory = 2;
inline constexpr std::size_t kInputDim = kEncodedDim + (kHistory + 1) * kActionDim;
inline constexpr std::size_t kGoalDim = 3;
inline constexpr std::size_t kObservationDim = kEncodedDim + kGoalDim;

// Column offsets inside EncodedState.
inline constexpr std::size_t kEncSin = 2;
inline constexpr std::size_t kEncCos = 3;
inline constexpr std::size_t kEncEePos = 7;

// Column offset of u_t inside a model input row.
inline constexpr std::size_t kInputCurrentAction = kEncodedDim + kHistory * kActionDim;

using Vec3 = std::array<double, 3>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

struct RobotState {
  Vec3 p_base{};  // x, y, theta
  Vec3 v_base{};  // vx, vy, omega
  Vec3 p_ee{};
  Vec3 v_ee{};

  std::array<double, kStateDim> to_array() const;
  static RobotState from_array(std::span<const double, kStateDim> values);

  bool is_finite() const;
  double theta() const { return p_base[2]; }

  bool operator==(const RobotState&) const = default;
};

struct Action {
  Vec3 base{};  // u_vx, u_vy, u_omega
  Vec3 ee{};

  std::array<double, kActionDim> to_array() const;
  static Action from_array(std::span<const double, kActionDim> values);

  bool is_finite() const;
  bool operator==(const Action&) const = default;
};

using EncodedState = std::array<double, kEncodedDim>;

// Throws std::invalid_argument on non-finite input.
EncodedState encode_state(const RobotState& s);
RobotState decode_state(const EncodedState& e);

struct Transition {
  RobotState s;
  Action u;
  RobotState s_next;
  std::int64_t episode = 0;
  std::int64_t step = 0;
};

struct SupervisedSet {
  RowMatrix x;  // N x kInputDim
  RowMatrix y;  // N x kEncodedDim

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  bool empty() const { return x.rows() == 0; }
};

// Fills one model-input row from an encoded state, the two previous actions
// and the current action.
void write_input_row(const EncodedState& enc, const Action& u_prev2, const Action& u_prev1,
                     const Action& u, std::span<double, kInputDim> row);

// One row per transition. Transitions must be grouped by episode with
// consecutive step indices and chained states; history before the first step
// of an episode is zero-filled. Throws std::invalid_argument otherwise.
SupervisedSet build_supervised(std::span<const Transition> transitions);

// n distinct indices drawn uniformly from [0, population), in draw order.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

// Rows drawn uniformly without replacement. Throws when n > set.rows().
SupervisedSet sample_iid(const SupervisedSet& set, std::size_t n, std::uint64_t seed);

SupervisedSet select_rows(const SupervisedSet& set, std::span<const std::size_t> rows);

struct Goal {
  Vec3 p{};
};

using Observation = std::array<double, kObservationDim>;

Observation make_observation(const EncodedState& enc, const Goal& goal);

}  // namespace mblab
