#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "mblab/core/dataset_csv.hpp"
#include "mblab/core/rng.hpp"
#include "mblab/core/types.hpp"

using namespace mblab;

namespace {

RobotState random_state(Rng& rng) {
  std::array<double, kStateDim> v{};
  for (auto& x : v) x = uniform(rng, -3.0, 3.0);
  return RobotState::from_array(v);
}

Action random_action(Rng& rng) {
  std::array<double, kActionDim> v{};
  for (auto& x : v) x = uniform(rng, -1.0, 1.0);
  return Action::from_array(v);
}

// A chained episode of random states and actions.
std::vector<Transition> make_episode(std::int64_t id, std::size_t len, Rng& rng) {
  std::vector<Transition> out;
  RobotState s = random_state(rng);
  for (std::size_t t = 0; t < len; ++t) {
    RobotState next = random_state(rng);
    out.push_back({s, random_action(rng), next, id, static_cast<std::int64_t>(t)});
    s = next;
  }
  return out;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  constexpr double pi = std::numbers::pi;
  CHECK(wrap_angle(pi) == pi);
  CHECK(wrap_angle(-pi) == doctest::Approx(pi));
  CHECK(wrap_angle(3.0 * pi / 2.0) == doctest::Approx(-pi / 2.0));
  CHECK(wrap_angle(0.25) == 0.25);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(uniform(rng, -50.0, 50.0));
    CHECK(w > -pi);
    CHECK(w <= pi);
  }
}

TEST_CASE("encode_state replaces yaw with its sine and cosine") {
  Rng rng(2);
  RobotState s = random_state(rng);
  s.p_base[2] = 0.0;
  EncodedState e = encode_state(s);
  CHECK(e[kEncSin] == 0.0);
  CHECK(e[kEncCos] == 1.0);
  const auto raw = s.to_array();
  CHECK(e[0] == raw[0]);
  CHECK(e[1] == raw[1]);
  for (std::size_t i = 3; i < kStateDim; ++i) CHECK(e[i + 1] == raw[i]);

  s.p_base[2] = std::numbers::pi / 2.0;
  e = encode_state(s);
  CHECK(e[kEncSin] == doctest::Approx(1.0));
  CHECK(std::abs(e[kEncCos]) < 1e-15);

  s.p_base[2] = 0.7;
  const RobotState back = decode_state(encode_state(s));
  for (std::size_t i = 0; i < kStateDim; ++i) CHECK(std::abs(back.to_array()[i] - s.to_array()[i]) <= 1e-12);
}

TEST_CASE("encode/decode round trip holds for 10^4 random yaw values") {
  Rng rng(3);
  double worst = 0.0;
  double worst_norm = 0.0;
  for (int i = 0; i < 10000; ++i) {
    RobotState s = random_state(rng);
    s.p_base[2] = wrap_angle(uniform(rng, -10.0, 10.0));
    const EncodedState e = encode_state(s);
    worst_norm = std::max(worst_norm, std::abs(e[kEncSin] * e[kEncSin] + e[kEncCos] * e[kEncCos] - 1.0));
    worst = std::max(worst, std::abs(decode_state(e).theta() - s.theta()));
  }
  CHECK(worst <= 1e-12);
  CHECK(worst_norm <= 1e-9);
}

TEST_CASE("encode_state rejects non-finite input") {
  RobotState s;
  s.v_ee[1] = std::nan("");
  CHECK_THROWS_AS(encode_state(s), std::invalid_argument);
}

TEST_CASE("build_supervised zero-fills history and differences encoded states") {
  Rng rng(4);
  SUBCASE("single transition") {
    auto ep = make_episode(0, 1, rng);
    const SupervisedSet set = build_supervised(ep);
    REQUIRE(set.rows() == 1);
    const EncodedState enc = encode_state(ep[0].s);
    for (std::size_t j = 0; j < kEncodedDim; ++j) CHECK(set.x(0, j) == enc[j]);
    for (std::size_t j = kEncodedDim; j < kInputCurrentAction; ++j) CHECK(set.x(0, j) == 0.0);
    const auto u = ep[0].u.to_array();
    for (std::size_t j = 0; j < kActionDim; ++j) CHECK(set.x(0, kInputCurrentAction + j) == u[j]);
  }
  SUBCASE("constant state gives zero target") {
    RobotState s = random_state(rng);
    std::vector<Transition> ep = {{s, random_action(rng), s, 0, 0}};
    const SupervisedSet set = build_supervised(ep);
    CHECK(set.y.isZero(0.0));
  }
  SUBCASE("three steps shift the action buffer") {
    auto ep = make_episode(5, 3, rng);
    const SupervisedSet set = build_supervised(ep);
    REQUIRE(set.rows() == 3);
    // Row 3 carries (u_1, u_2, u_3).
    for (std::size_t k = 0; k < 3; ++k) {
      const auto u = ep[k].u.to_array();
      for (std::size_t j = 0; j < kActionDim; ++j) CHECK(set.x(2, kEncodedDim + k * kActionDim + j) == u[j]);
    }
    // Row 2 carries (0, u_1, u_2).
    for (std::size_t j = 0; j < kActionDim; ++j) CHECK(set.x(1, kEncodedDim + j) == 0.0);
  }
}

TEST_CASE("build_supervised history columns follow the previous rows within an episode") {
  Rng rng(5);
  std::vector<Transition> all;
  for (std::int64_t ep = 0; ep < 4; ++ep) {
    auto e = make_episode(ep, 7 + static_cast<std::size_t>(ep), rng);
    all.insert(all.end(), e.begin(), e.end());
  }
  const SupervisedSet set = build_supervised(all);
  CHECK(set.rows() == all.size());
  CHECK(set.x.allFinite());
  CHECK(set.y.allFinite());
  for (std::size_t k = 0; k < all.size(); ++k) {
    for (std::size_t back = 1; back <= 2; ++back) {
      const std::size_t col = kInputCurrentAction - back * kActionDim;
      const bool same_episode = k >= back && all[k - back].episode == all[k].episode;
      for (std::size_t j = 0; j < kActionDim; ++j) {
        const double expected = same_episode ? set.x(k - back, kInputCurrentAction + j) : 0.0;
        CHECK(set.x(k, col + j) == expected);
      }
    }
  }
}

TEST_CASE("build_supervised rejects unordered or interleaved episodes") {
  Rng rng(6);
  auto a = make_episode(0, 3, rng);
  auto b = make_episode(1, 3, rng);
  std::vector<Transition> swapped = {a[0], a[2], a[1]};
  CHECK_THROWS_AS(build_supervised(swapped), std::invalid_argument);
  std::vector<Transition> interleaved = {a[0], b[0], a[1]};
  CHECK_THROWS_AS(build_supervised(interleaved), std::invalid_argument);
  auto broken = a;
  broken[1].s.p_ee[0] += 1.0;
  CHECK_THROWS_AS(build_supervised(broken), std::invalid_argument);
}

TEST_CASE("sample_iid draws distinct rows deterministically") {
  Rng rng(8);
  auto ep = make_episode(0, 5000, rng);
  const SupervisedSet set = build_supervised(ep);

  const auto idx = sample_indices(5000, 1000, 42);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 1000);
  CHECK(sample_indices(5000, 1000, 42) == idx);
  CHECK(sample_indices(5000, 1000, 43) != idx);

  const auto full = sample_indices(5000, 5000, 1);
  CHECK(std::set<std::size_t>(full.begin(), full.end()).size() == 5000);

  const SupervisedSet a = sample_iid(set, 1000, 42);
  const SupervisedSet b = sample_iid(set, 1000, 42);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.x.row(i) == set.x.row(idx[i]));
  CHECK_THROWS_AS(sample_iid(set, 5001, 1), std::invalid_argument);
}

TEST_CASE("transition csv round-trips bit-exactly and keeps the mandated header") {
  Rng rng(9);
  std::vector<Transition> all;
  for (std::int64_t ep = 0; ep < 3; ++ep) {
    auto e = make_episode(ep, 4, rng);
    all.insert(all.end(), e.begin(), e.end());
  }
  std::stringstream ss;
  write_transitions_csv(ss, all);
  const std::string text = ss.str();
  CHECK(text.rfind("episode,step,x_base,y_base,theta_base,vx_base,vy_base,omega_base,x_ee,y_ee,z_ee,"
                   "vx_ee,vy_ee,vz_ee,u_vx_base,u_vy_base,u_omega_base,u_vx_ee,u_vy_ee,u_vz_ee\n",
                   0) == 0);
  const auto back = read_transitions_csv(ss);
  REQUIRE(back.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(back[i].s == all[i].s);
    CHECK(back[i].u == all[i].u);
    CHECK(back[i].s_next == all[i].s_next);
    CHECK(back[i].episode == all[i].episode);
    CHECK(back[i].step == all[i].step);
  }
}

TEST_CASE("transition csv reports malformed rows") {
  std::stringstream bad("episode,step\n1,2\n");
  CHECK_THROWS(read_transitions_csv(bad));
  std::stringstream ss;
  Rng rng(10);
  write_transitions_csv(ss, make_episode(0, 2, rng));
  std::string text = ss.str();
  text.replace(text.find('\n') + 1, 1, "x");
  std::stringstream broken(text);
  CHECK_THROWS_WITH_AS(read_transitions_csv(broken), doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(parse_double(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, {2}) != derive_seed(1, {3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(5, {tag("a")}) == derive_seed(5, {tag("a")}));
}
