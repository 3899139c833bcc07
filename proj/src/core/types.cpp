#include "mblab/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mblab/core/rng.hpp"

namespace mblab {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

double wrap_angle(double theta) {
  constexpr double kPi = std::numbers::pi;
  if (theta > -kPi && theta <= kPi) return theta;
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

std::array<double, kStateDim> RobotState::to_array() const {
  return {p_base[0], p_base[1], p_base[2], v_base[0], v_base[1], v_base[2],
          p_ee[0],   p_ee[1],   p_ee[2],   v_ee[0],   v_ee[1],   v_ee[2]};
}

RobotState RobotState::from_array(std::span<const double, kStateDim> v) {
  return RobotState{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, {v[9], v[10], v[11]}};
}

bool RobotState::is_finite() const {
  const auto a = to_array();
  return all_finite(a);
}

std::array<double, kActionDim> Action::to_array() const {
  return {base[0], base[1], base[2], ee[0], ee[1], ee[2]};
}

Action Action::from_array(std::span<const double, kActionDim> v) {
  return Action{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

bool Action::is_finite() const {
  const auto a = to_array();
  return all_finite(a);
}

EncodedState encode_state(const RobotState& s) {
  if (!s.is_finite()) throw std::invalid_argument("encode_state: non-finite state");
  return {s.p_base[0], s.p_base[1], std::sin(s.p_base[2]), std::cos(s.p_base[2]),
          s.v_base[0], s.v_base[1], s.v_base[2],
          s.p_ee[0],   s.p_ee[1],   s.p_ee[2],
          s.v_ee[0],   s.v_ee[1],   s.v_ee[2]};
}

RobotState decode_state(const EncodedState& e) {
  RobotState s;
  s.p_base = {e[0], e[1], std::atan2(e[kEncSin], e[kEncCos])};
  s.v_base = {e[4], e[5], e[6]};
  s.p_ee = {e[7], e[8], e[9]};
  s.v_ee = {e[10], e[11], e[12]};
  return s;
}

void write_input_row(const EncodedState& enc, const Action& u_prev2, const Action& u_prev1,
                     const Action& u, std::span<double, kInputDim> row) {
  std::copy(enc.begin(), enc.end(), row.begin());
  const auto a2 = u_prev2.to_array();
  const auto a1 = u_prev1.to_array();
  const auto a0 = u.to_array();
  std::copy(a2.begin(), a2.end(), row.begin() + kEncodedDim);
  std::copy(a1.begin(), a1.end(), row.begin() + kEncodedDim + kActionDim);
  std::copy(a0.begin(), a0.end(), row.begin() + kInputCurrentAction);
}

SupervisedSet build_supervised(std::span<const Transition> transitions) {
  const auto n = static_cast<Eigen::Index>(transitions.size());
  SupervisedSet out{RowMatrix(n, kInputDim), RowMatrix(n, kEncodedDim)};

  std::vector<std::int64_t> finished;
  Action prev2;
  Action prev1;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Transition& tr = transitions[i];
    const bool starts_episode = i == 0 || tr.episode != transitions[i - 1].episode;
    if (starts_episode) {
      if (i > 0) finished.push_back(transitions[i - 1].episode);
      if (std::find(finished.begin(), finished.end(), tr.episode) != finished.end()) {
        throw std::invalid_argument("build_supervised: episode " + std::to_string(tr.episode) +
                                    " is not contiguous");
      }
      prev2 = Action{};
      prev1 = Action{};
    } else {
      const Transition& last = transitions[i - 1];
      if (tr.step != last.step + 1) {
        throw std::invalid_argument("build_supervised: steps out of order in episode " +
                                    std::to_string(tr.episode));
      }
      if (!(tr.s == last.s_next)) {
        throw std::invalid_argument("build_supervised: broken state chain in episode " +
                                    std::to_string(tr.episode) + " at step " +
                                    std::to_string(tr.step));
      }
    }
    if (!tr.u.is_finite()) throw std::invalid_argument("build_supervised: non-finite action");

    const EncodedState enc = encode_state(tr.s);
    const EncodedState enc_next = encode_state(tr.s_next);
    const auto r = static_cast<Eigen::Index>(i);
    write_input_row(enc, prev2, prev1, tr.u, std::span<double, kInputDim>(out.x.row(r).data(), kInputDim));
    for (std::size_t j = 0; j < kEncodedDim; ++j) out.y(r, static_cast<Eigen::Index>(j)) = enc_next[j] - enc[j];

    prev2 = prev1;
    prev1 = tr.u;
  }
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
  if (n > population) {
    throw std::invalid_argument("sample_indices: requested " + std::to_string(n) + " of " +
                                std::to_string(population));
  }
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed, {tag("sample_iid")});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, population - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

SupervisedSet select_rows(const SupervisedSet& set, std::span<const std::size_t> rows) {
  SupervisedSet out{RowMatrix(static_cast<Eigen::Index>(rows.size()), set.x.cols()),
                    RowMatrix(static_cast<Eigen::Index>(rows.size()), set.y.cols())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= set.rows()) throw std::out_of_range("select_rows: row index out of range");
    out.x.row(static_cast<Eigen::Index>(i)) = set.x.row(static_cast<Eigen::Index>(rows[i]));
    out.y.row(static_cast<Eigen::Index>(i)) = set.y.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

SupervisedSet sample_iid(const SupervisedSet& set, std::size_t n, std::uint64_t seed) {
  const auto idx = sample_indices(set.rows(), n, seed);
  return select_rows(set, idx);
}

Observation make_observation(const EncodedState& enc, const Goal& goal) {
  Observation obs{};
  std::copy(enc.begin(), enc.end(), obs.begin());
  std::copy(goal.p.begin(), goal.p.end(), obs.begin() + kEncodedDim);
  return obs;
}

}  // namespace mblab
