#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <sstream>

#include "mblab/core/dataset_csv.hpp"
#include "mblab/simenv/plant.hpp"

using namespace mblab;
using namespace mblab::simenv;

namespace {

kinematics::KinematicParams unbiased_params() {
  kinematics::KinematicParams p = PlantConfig::default_true_params();
  p.beta.fill(0.0);
  return p;
}

std::string csv_of(const std::vector<Transition>& t) {
  std::stringstream ss;
  write_transitions_csv(ss, t);
  return ss.str();
}

// Fixed point of v = f - c f |f|, f = a v + (1 - a) u, by bisection on [0, u].
double drag_fixed_point(double a, double u, double c) {
  double lo = 0.0, hi = u;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = a * mid + (1.0 - a) * u;
    const double g = f - c * f * std::abs(f) - mid;
    (g > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("commands reach the dynamics exactly delay_steps later") {
  PlantConfig cfg = PlantConfig::ideal(unbiased_params());
  cfg.delay_steps = 2;
  Plant plant(cfg, 1);
  plant.reset(RobotState{});
  CHECK(plant.pending().size() == 2);
  Action impulse;
  impulse.base = {1.0, 0.0, 0.0};
  plant.step(impulse);
  CHECK(plant.state() == RobotState{});
  plant.step(Action{});
  CHECK(plant.state() == RobotState{});
  plant.step(Action{});
  CHECK(plant.state().v_base[0] > 0.0);
  CHECK(plant.pending().size() == 2);
}

TEST_CASE("cross-correlation of command and yaw rate peaks at the delay") {
  for (int delay : {0, 1, 2, 3}) {
    PlantConfig cfg = PlantConfig::defaults();
    cfg.delay_steps = delay;
    Plant plant(cfg, 2);
    plant.reset(RobotState{});
    Rng rng(3);
    constexpr std::size_t n = 5000;
    std::vector<double> u(n), w(n + 1, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      u[t] = uniform(rng, -1.0, 1.0);
      Action a;
      a.base[2] = u[t];
      w[t + 1] = plant.step(a).v_base[2];
    }
    int best = -1;
    double best_corr = -1e300;
    for (int lag = 0; lag <= 6; ++lag) {
      double c = 0.0;
      for (std::size_t t = 0; t + 1 + lag < w.size(); ++t) c += u[t] * w[t + 1 + lag];
      if (c > best_corr) {
        best_corr = c;
        best = lag;
      }
    }
    CAPTURE(delay);
    CHECK(best == delay);
  }
}

TEST_CASE("degenerate plant replays through step_kinematic") {
  const auto params = PlantConfig::default_true_params();
  Plant plant(PlantConfig::ideal(params), 4);
  Rng rng(5);
  RobotState s = sample_initial_state(InitialStateBox{}, rng);
  plant.reset(s);
  const auto actions = excitation_policy(6, 500);
  for (const Action& a : actions) {
    const RobotState expected = kinematics::step_kinematic(s, a, params, kinematics::kDefaultDt);
    const RobotState got = plant.step(a);
    const auto e = expected.to_array();
    const auto g = got.to_array();
    for (std::size_t i = 0; i < kStateDim; ++i) CHECK(std::abs(e[i] - g[i]) <= 1e-12);
    s = got;
  }
}

TEST_CASE("drag lowers the steady-state speed to the 1-D fixed point") {
  PlantConfig cfg = PlantConfig::ideal(unbiased_params());
  cfg.delay_steps = 2;
  Action cmd;
  cmd.base = {0.8, 0.0, 0.0};

  Plant free_plant(cfg, 7);
  cfg.drag_coeff = 0.2;
  Plant drag_plant(cfg, 7);
  for (int t = 0; t < 2000; ++t) {
    free_plant.step(cmd);
    drag_plant.step(cmd);
  }
  const double v_free = free_plant.state().v_base[0];
  const double v_drag = drag_plant.state().v_base[0];
  const double a = cfg.true_params.alpha[0];
  CHECK(v_free == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(v_drag < v_free);
  CHECK(v_drag == doctest::Approx(drag_fixed_point(a, 0.8, 0.2)).epsilon(1e-10));
}

TEST_CASE("plant noise matches the configured standard deviations") {
  PlantConfig cfg = PlantConfig::defaults();
  cfg.delay_steps = 0;
  cfg.arm_reach = 0.0;
  Plant plant(cfg, 8);
  const auto actions = excitation_policy(9, 1000);
  constexpr std::size_t n = 100000;
  std::array<double, kStateDim> sq{};
  Rng rng(10);
  for (std::size_t k = 0; k < n; ++k) {
    if (k % 1000 == 0) plant.reset(sample_initial_state(InitialStateBox{}, rng));
    const RobotState s = plant.state();
    const Action& a = actions[k % 1000];
    const RobotState twin =
        kinematics::step_kinematic(s, a, cfg.true_params, cfg.dt, cfg.drag_coeff);
    const auto got = plant.step(a).to_array();
    const auto want = twin.to_array();
    for (std::size_t i = 0; i < kStateDim; ++i) {
      const double r = i == 2 ? wrap_angle(got[i] - want[i]) : got[i] - want[i];
      sq[i] += r * r;
    }
  }
  for (std::size_t i = 0; i < kStateDim; ++i) {
    CAPTURE(i);
    CHECK(std::sqrt(sq[i] / n) == doctest::Approx(cfg.noise_std[i]).epsilon(0.05));
  }
}

TEST_CASE("excitation policy is smooth, bounded and centred") {
  const ExcitationConfig ex;
  const CommandLimits limits;
  constexpr std::size_t n = 100000;
  const auto u = excitation_policy(11, n, ex, limits);
  REQUIRE(u.size() == n);
  CHECK(excitation_policy(11, 50, ex, limits) == std::vector<Action>(u.begin(), u.begin() + 50));
  CHECK_THROWS_AS(excitation_policy(11, 0), std::invalid_argument);

  std::array<double, kActionDim> sum{}, sq{}, lag1{};
  double max_jump = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto a = u[k].to_array();
    CHECK(limits.contains(u[k]));
    for (std::size_t i = 0; i < kActionDim; ++i) {
      sum[i] += a[i];
      sq[i] += a[i] * a[i];
      if (k > 0) {
        const double prev = u[k - 1].to_array()[i];
        lag1[i] += a[i] * prev;
        max_jump = std::max(max_jump, std::abs(a[i] - prev));
      }
    }
  }
  CHECK(max_jump < 3.0 * ex.step_scale);
  for (std::size_t i = 0; i < kActionDim; ++i) {
    const double mean = sum[i] / n;
    const double var = sq[i] / n - mean * mean;
    // Standard error of the mean of an AR(1) sequence.
    const double rho = (lag1[i] / (n - 1) - mean * mean) / var;
    const double se = std::sqrt(var / n * (1.0 + rho) / (1.0 - rho));
    CAPTURE(i);
    CHECK(std::abs(mean) < 3.0 * se);
  }
}

TEST_CASE("collect_dataset") {
  const PlantConfig cfg = PlantConfig::defaults();
  const CollectResult one = collect_dataset(cfg, 1, 120, 12);
  CHECK(one.transitions.size() == 120);
  CHECK(one.truncated_episodes.empty());
  const SupervisedSet set = build_supervised(one.transitions);
  CHECK(set.rows() == 120);

  const CollectResult a = collect_dataset(cfg, 3, 40, 13);
  const CollectResult b = collect_dataset(cfg, 3, 40, 13);
  CHECK(csv_of(a.transitions) == csv_of(b.transitions));
  CHECK(csv_of(a.transitions) != csv_of(collect_dataset(cfg, 3, 40, 14).transitions));

  const auto t0 = std::chrono::steady_clock::now();
  const CollectResult big = collect_dataset(cfg, 50, 100, 15);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(big.transitions.size() == 5000);
  CHECK(secs < 10.0);
}

TEST_CASE("divergent episodes are truncated and flagged") {
  PlantConfig cfg = PlantConfig::defaults();
  cfg.safety_bound = 2.5;
  const CollectResult r = collect_dataset(cfg, 6, 200, 16);
  CHECK(!r.truncated_episodes.empty());
  for (const Transition& t : r.transitions) {
    for (double x : t.s_next.to_array()) CHECK(std::abs(x) <= 2.5);
  }
  CHECK_NOTHROW(build_supervised(r.transitions));
}

TEST_CASE("initial states respect the sampling box") {
  Rng rng(17);
  const InitialStateBox box;
  for (int i = 0; i < 1000; ++i) {
    const RobotState s = sample_initial_state(box, rng);
    CHECK(std::abs(s.p_base[0]) <= box.half_extent);
    CHECK(std::abs(s.p_base[1]) <= box.half_extent);
    const double d = std::hypot(s.p_ee[0] - s.p_base[0], s.p_ee[1] - s.p_base[1]);
    CHECK(d >= box.ee_radius_min - 1e-12);
    CHECK(d <= box.ee_radius_max + 1e-12);
    CHECK(s.p_ee[2] >= box.ee_height_min);
    CHECK(s.p_ee[2] <= box.ee_height_max);
    CHECK(s.v_base == Vec3{});
    CHECK(s.v_ee == Vec3{});
  }
}

TEST_CASE("plant config text round trip") {
  PlantConfig cfg = PlantConfig::defaults();
  cfg.delay_steps = 3;
  cfg.drag_coeff = 0.125;
  std::stringstream ss;
  write_plant_config(ss, cfg);
  const PlantConfig back = parse_plant_config(ss);
  CHECK(back.true_params == cfg.true_params);
  CHECK(back.delay_steps == 3);
  CHECK(back.noise_std == cfg.noise_std);
  CHECK(back.drag_coeff == 0.125);
  CHECK(back.dt == cfg.dt);

  std::stringstream unknown("speed = 3\n");
  CHECK_THROWS_AS(parse_plant_config(unknown), std::invalid_argument);
  std::stringstream negative("delay_steps = -1\n");
  CHECK_THROWS_AS(parse_plant_config(negative), std::invalid_argument);
  std::stringstream partial("# comment only\ndrag_coeff = 0.3\n");
  CHECK(parse_plant_config(partial).drag_coeff == 0.3);
}

TEST_CASE("arm workspace limit") {
  PlantConfig cfg = PlantConfig::ideal(PlantConfig::default_true_params());
  cfg.arm_reach = 1.0;
  cfg.ee_z_min = 0.1;
  cfg.ee_z_max = 1.2;
  Plant plant(cfg, 3);
  RobotState s;
  s.p_ee = {0.5, 0.0, 0.5};
  plant.reset(s);
  Action out;
  out.ee = {1.0, 0.3, 1.0};
  out.base = {0.2, 0.0, 0.4};
  for (int t = 0; t < 300; ++t) {
    const RobotState& n = plant.step(t < 150 ? out : Action{{0.0, 0.0, 0.0}, {0.0, 0.0, -1.0}});
    CHECK(std::hypot(n.p_ee[0] - n.p_base[0], n.p_ee[1] - n.p_base[1]) <= 1.0 + 1e-12);
    CHECK(n.p_ee[2] >= 0.1);
    CHECK(n.p_ee[2] <= 1.2);
  }
  CHECK(plant.state().p_ee[2] == doctest::Approx(0.1));

  PlantConfig bad = cfg;
  bad.ee_z_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("ee centring in the excitation") {
  const ExcitationConfig ex;
  const CommandLimits limits;
  RobotState s;
  s.p_base = {1.0, 2.0, std::numbers::pi / 2};
  // Nominal offset rotated into the world: forward is +y.
  s.p_ee = {1.0, 2.7, 0.6};
  Action u;
  u.base = {0.1, 0.2, 0.3};
  u.ee = {0.1, -0.2, 0.05};
  const Action same = centred_command(u, s, ex, limits);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same.ee[i] == doctest::Approx(u.ee[i]).epsilon(1e-12));
  CHECK(same.base == u.base);

  s.p_ee = {1.0, 2.5, 0.6};  // 0.2 m short in the forward direction
  const Action pulled = centred_command(Action{}, s, ex, limits);
  CHECK(pulled.ee[0] == doctest::Approx(0.2 * ex.ee_centering).epsilon(1e-12));
  CHECK(std::abs(pulled.ee[1]) < 1e-12);

  s.p_ee = {30.0, 2.0, 0.6};
  CHECK(limits.contains(centred_command(u, s, ex, limits)));
}
