// Acceptance checks. One line per criterion:
//   criterion <k> <PASS|FAIL> <name>: <detail> (<seconds> s)
// Exit status is non-zero when any selected criterion fails.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mblab/bnn/ensemble.hpp"
#include "mblab/bnn/prior.hpp"
#include "mblab/core/rng.hpp"
#include "mblab/diffcore/mlp.hpp"
#include "mblab/experiments/suite.hpp"
#include "mblab/kinematics/kinematics.hpp"
#include "mblab/kinematics/sim_model.hpp"
#include "mblab/policy/env.hpp"
#include "mblab/policy/reward.hpp"
#include "mblab/policy/sac.hpp"
#include "mblab/simenv/plant.hpp"

namespace fs = std::filesystem;
using namespace mblab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Collects failed sub-checks by name.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) failed_.push_back(what);
  }
  bool ok() const { return failed_.empty(); }
  std::string summary() const {
    std::string s = std::to_string(total_ - failed_.size()) + "/" + std::to_string(total_) + " checks";
    for (std::size_t i = 0; i < failed_.size() && i < 5; ++i) s += (i == 0 ? "; failed: " : ", ") + failed_[i];
    return s;
  }

 private:
  std::size_t total_ = 0;
  std::vector<std::string> failed_;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------- 1

Outcome formula_fidelity() {
  using namespace kinematics;
  constexpr double kTol = 1e-12;
  constexpr double kDt = 1.0 / 15.0;
  Checks c;

  for (const auto& [m, a] : std::vector<std::pair<double, double>>{{1.5, 0.1}, {1.3, 0.1}, {0.4, 0.7}, {3.0, 0.01}}) {
    c.expect(policy::sigmoid_ma(0.0, m, a) == 1.0, "sigmoid(0) = 1");
    c.expect(near(policy::sigmoid_ma(m, m, a), a, kTol), "sigmoid(m) = a");
  }
  c.expect(near(policy::sigmoid_ma(3.0, 1.5, 0.1), 1.0 / 37.0, kTol), "sigmoid(2m) = 1/37");

  Action u;
  u.base = {0.3, -0.2, 0.7};
  u.ee = {0.1, 0.4, -0.5};
  const WorldAction w0 = rotate_to_world(u, 0.0);
  c.expect(w0.base == u.base && w0.ee == u.ee, "R(0) = I");
  Action ux;
  ux.base = {1.0, 0.0, 0.0};
  const WorldAction wq = rotate_to_world(ux, std::numbers::pi / 2.0);
  c.expect(near(wq.base[0], 0.0, kTol) && near(wq.base[1], 1.0, kTol) && wq.base[2] == 0.0, "quarter turn");
  Action ud;
  ud.base = {1.0, 1.0, 0.0};
  const WorldAction w8 = rotate_to_world(ud, std::numbers::pi / 4.0);
  c.expect(near(w8.base[0], 0.0, kTol) && near(w8.base[1], std::sqrt(2.0), kTol), "eighth turn");
  Rng rng(1);
  bool norms = true;
  for (int i = 0; i < 1000; ++i) {
    Action r;
    for (int k = 0; k < 3; ++k) {
      r.base[k] = uniform(rng, -2.0, 2.0);
      r.ee[k] = uniform(rng, -2.0, 2.0);
    }
    const WorldAction w = rotate_to_world(r, uniform(rng, -10.0, 10.0));
    norms = norms && near(std::hypot(w.base[0], w.base[1]), std::hypot(r.base[0], r.base[1]), kTol) &&
            near(std::hypot(w.ee[0], w.ee[1]), std::hypot(r.ee[0], r.ee[1]), kTol) && w.base[2] == r.base[2] &&
            w.ee[2] == r.ee[2];
  }
  c.expect(norms, "rotation preserves planar norms");

  RobotState s;
  s.p_ee = {1.0, 0.0, 0.5};
  const Vec3 i0 = induced_velocity(s, 0.0);
  c.expect(i0 == Vec3{0.0, 0.0, 0.0}, "induced(omega = 0) = 0");
  const Vec3 i1 = induced_velocity(s, 1.0);
  c.expect(near(i1[0], 0.0, kTol) && near(i1[1], 1.0, kTol) && i1[2] == 0.0, "induced at phi = 0");
  RobotState axis;
  axis.p_base = {0.4, -0.3, 0.2};
  axis.p_ee = {0.4, -0.3, 0.8};
  c.expect(induced_velocity(axis, 2.0) == Vec3{0.0, 0.0, 0.0}, "induced(d = 0) = 0");

  KinematicParams hold;
  hold.alpha.fill(1.0);
  hold.gamma.fill(1.0);
  RobotState moving;
  moving.v_base = {0.3, -0.4, 0.1};
  Action any;
  any.base = {1.0, -1.0, 0.5};
  const RobotState held = step_kinematic(moving, any, hold, kDt);
  c.expect(near(held.v_base[0], 0.3, kTol) && near(held.v_base[1], -0.4, kTol) && near(held.v_base[2], 0.1, kTol),
           "alpha = 1 ignores the command");

  KinematicParams direct;
  direct.alpha.fill(0.0);
  direct.beta.fill(0.0);
  direct.gamma.fill(1.0);
  const RobotState rest;
  Action fwd;
  fwd.base = {1.0, 0.0, 0.0};
  const RobotState d1 = step_kinematic(rest, fwd, direct, kDt);
  c.expect(near(d1.v_base[0], 1.0, kTol) && near(d1.v_base[1], 0.0, kTol) && near(d1.v_base[2], 0.0, kTol),
           "alpha = 0 base velocity");
  c.expect(near(d1.p_base[0], kDt, kTol) && near(d1.p_base[1], 0.0, kTol), "alpha = 0 base position");
  c.expect(near(d1.v_ee[0], 1.0, kTol) && near(d1.v_ee[1], 0.0, kTol) && near(d1.v_ee[2], 0.0, kTol),
           "ee inherits base velocity");

  KinematicParams biased;
  biased.alpha.fill(0.5);
  biased.beta = {0.01, -0.02, 0.03, 0.001, -0.002, 0.003, 0.04, -0.05, 0.06, 0.004, -0.005, 0.006};
  biased.gamma = {1.1, 0.9, 1.2, 0.8, 1.05, 0.95};
  const RobotState b1 = step_kinematic(rest, Action{}, biased, kDt);
  const auto& be = biased.beta;
  const auto& g = biased.gamma;
  bool bias_ok = true;
  for (int i = 0; i < 3; ++i) {
    bias_ok = bias_ok && near(b1.v_base[i], be[i], kTol) && near(b1.p_base[i], kDt * g[i] * be[i] + be[3 + i], kTol);
    // ee at the base axis: no induced velocity; x/y pick up the base velocity.
    const double vee = be[6 + i] + (i < 2 ? be[i] : 0.0);
    bias_ok = bias_ok && near(b1.v_ee[i], vee, kTol) && near(b1.p_ee[i], kDt * g[3 + i] * vee + be[9 + i], kTol);
  }
  c.expect(bias_ok, "bias-only step");

  return {c.ok(), c.summary()};
}

// ---------------------------------------------------------------- 2

Outcome gradient_correctness() {
  using namespace diffcore;
  Rng rng(2);
  const OutputLoss loss = [](const RowMatrix& y, RowMatrix& dy) {
    dy = 2.0 * y;
    return y.squaredNorm();
  };
  std::size_t passed = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + static_cast<std::size_t>(uniform(rng, 0.0, 8.0));
    const std::size_t hid = 2 + static_cast<std::size_t>(uniform(rng, 0.0, 14.0));
    const std::size_t out = 1 + static_cast<std::size_t>(uniform(rng, 0.0, 5.0));
    const Activation act = trial % 2 == 0 ? Activation::kSwish : Activation::kTanh;
    const Mlp net({in, hid, hid, out}, act);
    const Vector p = net.init(rng);
    RowMatrix x(4, static_cast<Eigen::Index>(in));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1.0, 1.0);
    const ValueAndGrad vg = grad_scalar(net, p, x, loss);
    Vector fd(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double h = 1e-5;
      Vector up = p, dn = p;
      up[j] += h;
      dn[j] -= h;
      fd[j] = (net.forward(up, x).squaredNorm() - net.forward(dn, x).squaredNorm()) / (2.0 * h);
    }
    const double rel = (vg.grad - fd).norm() / std::max(fd.norm(), 1e-12);
    worst = std::max(worst, rel);
    if (rel < 1e-4) ++passed;
  }
  return {passed == 100, std::to_string(passed) + "/100 random nets, worst relative error " + fmt(worst, 3)};
}

// ---------------------------------------------------------------- 3

Outcome prior_machinery() {
  using namespace bnn;
  Checks c;
  Rng rng(3);

  const GapPriorConfig gap{0.8, 0.3};
  RowMatrix x(6, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1.0, 1.0);
  const Eigen::MatrixXd k = se_kernel(x, x, gap);
  const GapSampler sampler(x, gap);
  const int draws = 10000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(6, 6);
  for (int d = 0; d < draws; ++d) {
    const RowMatrix h = sampler.draw(rng, 1);
    acc += h.col(0) * h.col(0).transpose();
  }
  acc /= draws;
  const double cov_err = (acc - k).cwiseAbs().maxCoeff();
  c.expect(cov_err <= 0.05 * gap.outputscale, "GP covariance within 5% of nu^2");

  double score_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<RowMatrix> samples;
    for (int m = 0; m < 40; ++m) {
      RowMatrix s(5, 3);
      for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = uniform(rng, -1.0, 1.0);
      samples.push_back(s);
    }
    const PriorGaussian pg = estimate_prior_gaussian(samples);
    RowMatrix h(5, 3);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = uniform(rng, -1.0, 1.0);
    const RowMatrix score = gaussian_score(pg, h);
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      const double step = 1e-6;
      RowMatrix up = h, dn = h;
      up.data()[i] += step;
      dn.data()[i] -= step;
      const double fd = (gaussian_log_density(pg, up) - gaussian_log_density(pg, dn)) / (2.0 * step);
      score_err = std::max(score_err, std::abs(fd - score.data()[i]) / std::max(1.0, std::abs(fd)));
    }
  }
  c.expect(score_err < 1e-5, "Gaussian score matches finite differences");

  double min_eig = 1.0, asym = 0.0, diag = 0.0;
  for (int e = 0; e < 20; ++e) {
    const auto particles = static_cast<Eigen::Index>(2 + e % 9);
    const double spread = 0.05 + 0.25 * e;
    RowMatrix h(particles, 40);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = uniform(rng, -spread, spread);
    const Eigen::MatrixXd gm = gram(h, 5.0);
    asym = std::max(asym, (gm - gm.transpose()).cwiseAbs().maxCoeff());
    diag = std::max(diag, (gm.diagonal().array() - 1.0).abs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gm);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  c.expect(asym == 0.0 && diag == 0.0, "gram symmetric with unit diagonal");
  c.expect(min_eig >= -1e-12, "gram PSD");

  std::ostringstream d;
  d << c.summary() << "; covariance error " << fmt(cov_err / gap.outputscale, 3) << " nu^2, score error "
    << fmt(score_err, 3) << ", min gram eigenvalue " << fmt(min_eig, 3);
  return {c.ok(), d.str()};
}

// ---------------------------------------------------------------- 4

kinematics::KinematicParams planted_params() {
  kinematics::KinematicParams p;
  p.alpha = {0.7, 0.6, 0.5, 0.8, 0.4, 0.65};
  p.beta = {0.02, -0.03, 0.025, 0.006, -0.005, 0.007, -0.02, 0.03, 0.015, -0.006, 0.005, 0.004};
  p.gamma = {1.1, 0.9, 1.2, 0.85, 1.05, 0.95};
  return p;
}

// Noiseless transitions from random states and commands.
SupervisedSet planted_data(const kinematics::KinematicParams& phi, std::size_t episodes, std::size_t len,
                           std::uint64_t seed) {
  Rng rng = make_rng(seed, {tag("planted_data")});
  std::vector<Transition> all;
  for (std::size_t e = 0; e < episodes; ++e) {
    RobotState s;
    for (int i = 0; i < 3; ++i) {
      s.v_base[i] = uniform(rng, -0.8, 0.8);
      s.v_ee[i] = uniform(rng, -0.8, 0.8);
      s.p_ee[i] = uniform(rng, -1.5, 1.5);
    }
    s.p_base = {uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, -3.1, 3.1)};
    for (std::size_t t = 0; t < len; ++t) {
      std::array<double, kActionDim> a{};
      for (auto& v : a) v = uniform(rng, -1.0, 1.0);
      const Action u = Action::from_array(a);
      const RobotState next = kinematics::step_kinematic(s, u, phi, kinematics::kDefaultDt);
      all.push_back({s, u, next, static_cast<std::int64_t>(e), static_cast<std::int64_t>(t)});
      s = next;
    }
  }
  return build_supervised(all);
}

Outcome oracle_recovery() {
  using namespace kinematics;
  const KinematicParams truth = planted_params();
  const auto want = truth.to_array();
  const ParamPrior bounds = ParamPrior::defaults();
  std::vector<double> worst;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const FitResult fit = fit_sim_model(planted_data(truth, 40, 50, seed), bounds.midpoint(), bounds, FitConfig{});
    const auto got = fit.params.to_array();
    double w = 0.0;
    for (std::size_t j = 0; j < kNumParams; ++j) w = std::max(w, std::abs(got[j] - want[j]) / std::abs(want[j]));
    worst.push_back(w);
  }
  const double med = median(worst);
  return {med <= 0.05, "median over 3 seeds of the worst relative parameter error " + fmt(med, 3) + " (seeds: " +
                           fmt(worst[0], 3) + ", " + fmt(worst[1], 3) + ", " + fmt(worst[2], 3) + ")"};
}

// ---------------------------------------------------------------- 5

Outcome sim_fsvgd_advantage(const fs::path& work) {
  const auto data = simenv::collect_dataset(simenv::PlantConfig::defaults(), 60, 120, 5).transitions;
  const experiments::DataSplit split = experiments::split_by_episode(data, 0.2);
  bnn::BnnConfig cfg;
  cfg.eval_every = 0;
  std::map<std::pair<std::size_t, bnn::Mode>, std::vector<double>> nll;
  std::ofstream log(work / "criterion5.csv");
  log << "n,seed,mode,test_nll\n";
  for (std::size_t n : {std::size_t{500}, std::size_t{5000}}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto idx = experiments::subsample_rows(split.pool.rows(), n, 0, seed);
      SupervisedSet train;
      train.x.resize(static_cast<Eigen::Index>(n), split.pool.x.cols());
      train.y.resize(static_cast<Eigen::Index>(n), split.pool.y.cols());
      for (std::size_t i = 0; i < n; ++i) {
        train.x.row(static_cast<Eigen::Index>(i)) = split.pool.x.row(static_cast<Eigen::Index>(idx[i]));
        train.y.row(static_cast<Eigen::Index>(i)) = split.pool.y.row(static_cast<Eigen::Index>(idx[i]));
      }
      for (bnn::Mode mode : {bnn::Mode::kSimFsvgd, bnn::Mode::kFsvgd}) {
        const double v = bnn::eval_nll(bnn::train_bnn(train, mode, cfg, seed).ensemble, split.test);
        nll[{n, mode}].push_back(v);
        log << n << ',' << seed << ',' << bnn::to_string(mode) << ',' << v << '\n' << std::flush;
      }
    }
  }
  const auto med = [&](std::size_t n, bnn::Mode m) { return median(nll[{n, m}]); };
  const double s500 = med(500, bnn::Mode::kSimFsvgd), f500 = med(500, bnn::Mode::kFsvgd);
  const double s5k = med(5000, bnn::Mode::kSimFsvgd), f5k = med(5000, bnn::Mode::kFsvgd);
  const bool order = s500 < f500;
  const bool shrink = std::abs(s5k - f5k) < std::abs(s500 - f500);
  std::ostringstream d;
  d << "median test NLL N=500 sim-fsvgd " << fmt(s500) << " vs fsvgd " << fmt(f500) << (order ? " (ok)" : " (not lower)")
    << "; N=5000 " << fmt(s5k) << " vs " << fmt(f5k) << ", |gap| " << fmt(std::abs(s5k - f5k)) << " vs "
    << fmt(std::abs(s500 - f500)) << (shrink ? " (shrinks)" : " (does not shrink)");
  return {order && shrink, d.str()};
}

// ---------------------------------------------------------------- 6

Outcome tracking_ordering(const fs::path& work) {
  const auto data = simenv::collect_dataset(simenv::PlantConfig::defaults(), 60, 120, 6).transitions;
  experiments::SuiteConfig cfg;
  cfg.ns = {500, 2000};
  const fs::path out = work / "criterion6";
  fs::create_directories(out);
  const experiments::SuiteResult result = experiments::run_suite(data, cfg, out.string());
  std::map<std::tuple<std::string, std::size_t, std::string>, std::vector<double>> err;
  for (const auto& r : result.rows) {
    if (r.stage == "track") err[{r.mode, r.n, r.metric}].push_back(r.value);
  }
  bool pass = result.failures.empty();
  std::ostringstream d;
  if (!result.failures.empty()) d << result.failures.size() << " failed cells; ";
  for (std::size_t n : cfg.ns) {
    for (const std::string metric : {"ellipse_error", "helix_error"}) {
      const double s = median(err[{experiments::kModeSimFsvgd, n, metric}]);
      const double f = median(err[{experiments::kModeFsvgd, n, metric}]);
      const double m = median(err[{experiments::kModeSimModel, n, metric}]);
      const bool ok = s < f && s < m;
      pass = pass && ok;
      d << "N=" << n << ' ' << metric.substr(0, metric.find('_')) << " " << fmt(s, 3) << "/" << fmt(f, 3) << "/"
        << fmt(m, 3) << (ok ? " ok" : " out of order") << "; ";
    }
  }
  d << "medians sim-fsvgd/fsvgd/sim-model in m; results in " << out.string();
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 7

Outcome oracle_policy(const fs::path& work) {
  const simenv::PlantConfig plant = simenv::PlantConfig::defaults();
  const policy::SacConfig sac;
  const policy::RewardConfig reward;
  const policy::Workspace ws;
  const auto factory = policy::plant_env_factory(plant, ws, reward, sac.episode_length);
  std::vector<double> success;
  std::ofstream log(work / "criterion7.csv");
  log << "seed,success_rate,mean_final_distance,mean_return\n";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const policy::SacResult r = policy::sac_train(factory, sac, plant.command_limits, seed);
    const policy::EvalResult ev = policy::evaluate(r.policy, factory, 128, reward.b, derive_seed(seed, {tag("eval")}));
    success.push_back(ev.success_rate);
    log << seed << ',' << ev.success_rate << ',' << ev.mean_final_distance << ',' << ev.mean_return << '\n' << std::flush;
  }
  const double med = median(success);
  return {med >= 0.9, "median success over 3 seeds " + fmt(100.0 * med, 3) + "% (seeds: " +
                          fmt(100.0 * success[0], 3) + "%, " + fmt(100.0 * success[1], 3) + "%, " +
                          fmt(100.0 * success[2], 3) + "%) at " + std::to_string(sac.total_env_steps) +
                          " steps, need >= 90%"};
}

// ---------------------------------------------------------------- 8

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

std::vector<fs::path> csv_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const fs::path& work, const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found (pass --mblab)"};
  const fs::path sac_cfg = work / "tiny_sac.cfg";
  {
    std::ofstream out(sac_cfg);
    out << "total_env_steps = 3072\nreplay_min = 1024\nupdates_per_round = 64\nnum_envs = 8\nsteps_per_round = 16\n"
           "eval_episodes = 4\n";
  }
  Checks c;
  std::size_t compared = 0;
  for (const char* run_name : {"a", "b"}) {
    const fs::path d = work / "determinism" / run_name;
    fs::remove_all(d);
    fs::create_directories(d);
    const std::string q = "'" + cli + "' ";
    const std::string p = "'" + d.string() + "/";
    c.expect(run(q + "collect --episodes 12 --len 40 --seed 3 --out " + p + "data.csv'") == 0, "collect");
    c.expect(run(q + "train-bnn --mode sim-fsvgd --data " + p + "data.csv' --n 150 --epochs 3 --seed 4 --out " + p +
                 "sim'") == 0,
             "train-bnn sim-fsvgd");
    c.expect(run(q + "train-bnn --mode fsvgd --data " + p + "data.csv' --n 150 --epochs 3 --seed 4 --out " + p +
                 "gp'") == 0,
             "train-bnn fsvgd");
    c.expect(run(q + "fit-sim-model --data " + p + "data.csv' --n 150 --steps 200 --seed 4 --out " + p + "sm'") == 0,
             "fit-sim-model");
    c.expect(run(q + "train-policy --model " + p + "sim' --config '" + sac_cfg.string() + "' --seed 5 --quiet --out " +
                 p + "pol'") == 0,
             "train-policy");
    c.expect(run(q + "train-policy --env true --config '" + sac_cfg.string() + "' --seed 5 --quiet --out " + p +
                 "oracle'") == 0,
             "train-policy --env true");
    c.expect(run(q + "track --policy " + p + "pol' --shape helix --seed 6 --out " + p + "track.csv'") == 0, "track");
    c.expect(run(q + "suite --data " + p + "data.csv' --ns 100 --seeds 0,1 --modes sim-fsvgd,fsvgd,sim-model " +
                 "--sac-config '" + sac_cfg.string() + "' --out " + p + "suite'") == 0,
             "suite");
    c.expect(run(q + "report --in " + p + "suite/suite.csv' --out " + p + "figures'") == 0, "report");
  }
  const fs::path a = work / "determinism" / "a";
  const fs::path b = work / "determinism" / "b";
  const auto files_a = csv_files(a);
  c.expect(files_a == csv_files(b), "same CSV file set");
  for (const auto& f : files_a) {
    if (!fs::exists(b / f)) continue;
    c.expect(slurp(a / f) == slurp(b / f), f.string());
    ++compared;
  }
  c.expect(compared >= 10, "at least 10 CSV files compared");
  return {c.ok(), std::to_string(compared) + " CSV files bit-identical across reruns; " + c.summary()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  std::string cli;
  std::string work = "acceptance_work";
  app.add_option("--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 8));
  app.add_option("--mblab", cli, "path to the mblab CLI (criterion 8)");
  app.add_option("--work", work, "scratch and result directory");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8};
  fs::create_directories(work);
  const fs::path dir = fs::absolute(work);

  struct Criterion {
    const char* name;
    double budget_s;  // 0: no runtime bound checked here
    std::function<Outcome()> fn;
  };
  const std::map<int, Criterion> criteria{
      {1, {"formula fidelity", 1.0, formula_fidelity}},
      {2, {"gradient correctness", 60.0, gradient_correctness}},
      {3, {"prior machinery", 120.0, prior_machinery}},
      {4, {"oracle recovery", 300.0, oracle_recovery}},
      {5, {"controlled Sim-FSVGD advantage", 0.0, [&] { return sim_fsvgd_advantage(dir); }}},
      {6, {"tracking ordering", 0.0, [&] { return tracking_ordering(dir); }}},
      {7, {"oracle policy", 0.0, [&] { return oracle_policy(dir); }}},
      {8, {"determinism", 0.0, [&] { return determinism(dir, cli); }}},
  };

  bool all = true;
  for (int k : selected) {
    const Criterion& cr = criteria.at(k);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0.0 && secs > cr.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(cr.budget_s) + " s budget";
    }
    all = all && o.pass;
    std::cout << "criterion " << k << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << cr.name << ": " << o.detail << " ("
              << fmt(secs, 3) << " s)" << std::endl;
  }
  return all ? 0 : 1;
}
