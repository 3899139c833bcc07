// mblab: data collection, model and policy training, tracking, sweeps and
// reports from the command line.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "mblab/bnn/dynamics_model.hpp"
#include "mblab/core/dataset_csv.hpp"
#include "mblab/experiments/report.hpp"
#include "mblab/experiments/suite.hpp"
#include "mblab/simenv/plant.hpp"

using namespace mblab;
namespace fs = std::filesystem;

namespace {

simenv::PlantConfig plant_from(const std::string& path) {
  return path.empty() ? simenv::PlantConfig::defaults() : simenv::load_plant_config(path);
}

policy::SacConfig sac_from(const std::string& path) {
  return path.empty() ? policy::SacConfig{} : policy::load_sac_config(path);
}

void write_or_throw(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Training rows for (n, seed) as the suite draws them, and the held-out set.
std::pair<SupervisedSet, SupervisedSet> training_rows(const std::string& data, std::size_t n, std::uint64_t seed,
                                                      double test_fraction) {
  const auto split = experiments::split_by_episode(read_transitions_csv(data), test_fraction);
  const auto rows = experiments::subsample_rows(split.pool.rows(), n, 0, seed);
  return {select_rows(split.pool, rows), split.test};
}

struct Collect {
  std::string config, out;
  std::size_t episodes = 100, len = 120;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("collect", "Roll out the excitation policy on the plant");
    c->add_option("--config", config, "plant config (key = value)");
    c->add_option("--episodes", episodes, "number of episodes")->required();
    c->add_option("--len", len, "steps per episode")->required();
    c->add_option("--seed", seed)->required();
    c->add_option("--out", out, "transitions CSV")->required();
    c->callback([this] { run(); });
  }
  void run() const {
    const auto res = simenv::collect_dataset(plant_from(config), episodes, len, seed);
    write_transitions_csv(out, res.transitions);
    std::cout << "wrote " << res.transitions.size() << " transitions to " << out << '\n';
    if (!res.truncated_episodes.empty()) {
      std::cout << res.truncated_episodes.size() << " episode(s) diverged and were truncated\n";
    }
  }
};

struct TrainBnn {
  std::string mode, data, out;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t epochs = bnn::BnnConfig{}.epochs;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train-bnn", "Train an FSVGD or Sim-FSVGD ensemble");
    c->add_option("--mode", mode)->required()->check(CLI::IsMember({"fsvgd", "sim-fsvgd"}));
    c->add_option("--data", data, "transitions CSV")->required();
    c->add_option("--n", n, "training rows")->required();
    c->add_option("--seed", seed)->required();
    c->add_option("--out", out, "model directory")->required();
    c->add_option("--test-fraction", test_fraction, "held-out share of episodes");
    c->add_option("--epochs", epochs);
    c->callback([this] { run(); });
  }
  void run() const {
    const auto [train, test] = training_rows(data, n, seed, test_fraction);
    bnn::BnnConfig cfg;
    cfg.epochs = epochs;
    const auto res = bnn::train_bnn(train, bnn::mode_from_string(mode), cfg, seed, &test);
    bnn::save_ensemble(out, res.ensemble, {{"mode", mode}, {"n", n}, {"seed", seed}, {"epochs", epochs}});
    std::ofstream curve(fs::path(out) / "curve.csv");
    bnn::write_curve_csv(curve, res.curve);
    const double nll = bnn::eval_nll(res.ensemble, test);
    write_or_throw(fs::path(out) / "metrics.csv", "metric,value\ntest_nll," + format_double(nll) + "\n");
    std::cout << mode << " N=" << n << " seed=" << seed << " steps=" << res.steps << " skipped=" << res.skipped
              << " test_nll=" << nll << '\n';
  }
};

struct FitSim {
  std::string data, out;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t steps = kinematics::FitConfig{}.steps;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("fit-sim-model", "Fit the kinematic model's parameters (Sim-MODEL)");
    c->add_option("--data", data, "transitions CSV")->required();
    c->add_option("--n", n, "training rows")->required();
    c->add_option("--seed", seed)->required();
    c->add_option("--out", out, "model directory")->required();
    c->add_option("--test-fraction", test_fraction);
    c->add_option("--steps", steps, "optimizer steps");
    c->callback([this] { run(); });
  }
  void run() const {
    const auto [train, test] = training_rows(data, n, seed, test_fraction);
    kinematics::FitConfig fc;
    fc.steps = steps;
    const auto bounds = kinematics::ParamPrior::defaults();
    const auto fit = kinematics::fit_sim_model(train, bounds.midpoint(), bounds, fc);
    const kinematics::SimModel m{fit.params, kinematics::residual_std(train, fit.params, fc.dt), fc.dt};
    bnn::save_sim_model(out, m, {{"n", n}, {"seed", seed}, {"steps", steps}});
    const double nll = bnn::eval_nll(m, test);
    write_or_throw(fs::path(out) / "metrics.csv", "metric,value\ntest_nll," + format_double(nll) + "\n");
    std::cout << "sim-model N=" << n << " seed=" << seed << " final_loss=" << fit.loss_history.back()
              << " test_nll=" << nll << '\n';
  }
};

struct TrainPolicy {
  std::string model, env, config, plant, out;
  std::uint64_t seed = 0;
  bool quiet = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train-policy", "Train a SAC policy on a learned model or the plant");
    auto* m = c->add_option("--model", model, "model directory");
    auto* e = c->add_option("--env", env, "'true' trains on the plant")->check(CLI::IsMember({"true"}));
    m->excludes(e);
    c->add_option("--config", config, "SAC config (key = value)");
    c->add_option("--plant", plant, "plant config for the oracle and the evaluation");
    c->add_option("--seed", seed)->required();
    c->add_option("--out", out, "policy directory")->required();
    c->add_flag("--quiet", quiet);
    c->callback([this, m, e] {
      if (m->count() == 0 && e->count() == 0) throw CLI::ValidationError("one of --model or --env true is required");
      run();
    });
  }
  void run() const {
    const auto sac = sac_from(config);
    const auto pc = plant_from(plant);
    const policy::Workspace ws;
    const policy::RewardConfig rc;
    policy::EnvFactory factory;
    if (env == "true") {
      factory = policy::plant_env_factory(pc, ws, rc, sac.episode_length);
    } else {
      std::shared_ptr<const bnn::DynamicsModel> dm = bnn::load_dynamics_model(model);
      factory = policy::model_env_factory(dm, ws, rc, sac.episode_length, pc.safety_bound);
    }
    std::ostringstream log;
    log << "env_steps,updates,episodes,mean_return,mean_final_distance,alpha,critic_loss,actor_loss\n";
    const auto on_round = [&](const policy::SacProgress& p) {
      log << p.env_steps << ',' << p.updates << ',' << p.episodes << ',' << format_double(p.mean_episode_return)
          << ',' << format_double(p.mean_final_distance) << ',' << format_double(p.alpha) << ','
          << format_double(p.critic_loss) << ',' << format_double(p.actor_loss) << '\n';
      if (!quiet && p.env_steps % (sac.num_envs * sac.steps_per_round * 20) == 0) {
        std::cerr << "steps " << p.env_steps << " return " << p.mean_episode_return << " alpha " << p.alpha << '\n';
      }
    };
    policy::Policy pol;
    const nlohmann::json meta{{"seed", seed}, {"source", env == "true" ? "plant" : model}};
    try {
      pol = policy::sac_train(factory, sac, pc.command_limits, seed, on_round).policy;
    } catch (const policy::SacDivergence& d) {
      policy::save_policy((fs::path(out) / "checkpoint").string(), d.checkpoint(), meta);
      write_or_throw(fs::path(out) / "train_log.csv", log.str());
      throw;
    }
    policy::save_policy(out, pol, meta);
    write_or_throw(fs::path(out) / "train_log.csv", log.str());
    // Evaluation always runs on the plant.
    const auto eval_factory = policy::plant_env_factory(pc, ws, rc, sac.episode_length);
    const auto ev = policy::evaluate(pol, eval_factory, sac.eval_episodes, rc.b, derive_seed(seed, {tag("eval")}));
    write_or_throw(fs::path(out) / "eval.csv", "metric,value\nsuccess_rate," + format_double(ev.success_rate) +
                                                   "\nmean_final_distance," + format_double(ev.mean_final_distance) +
                                                   "\nmean_return," + format_double(ev.mean_return) + "\n");
    std::cout << "plant evaluation: success_rate=" << ev.success_rate
              << " mean_final_distance=" << ev.mean_final_distance << '\n';
  }
};

struct Track {
  std::string policy_dir, shape = "ellipse", plant, out;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("track", "Track a reference shape on the plant");
    c->add_option("--policy", policy_dir, "policy directory")->required();
    c->add_option("--shape", shape)->check(CLI::IsMember({"ellipse", "helix"}));
    c->add_option("--plant", plant, "plant config");
    c->add_option("--seed", seed)->required();
    c->add_option("--out", out, "trajectory CSV")->required();
    c->callback([this] { run(); });
  }
  void run() const {
    const auto pol = policy::load_policy(policy_dir);
    const auto params = experiments::shape_from_string(shape) == experiments::ShapeKind::kEllipse
                            ? experiments::ReferenceParams::ellipse()
                            : experiments::ReferenceParams::helix();
    const auto rep = experiments::track(pol, plant_from(plant), experiments::make_reference(params), seed);
    std::ofstream o(out);
    experiments::write_trajectories_csv(o, {{"policy", 0, seed, rep}});
    std::cout << shape << " mean_error=" << rep.mean_error << (rep.truncated ? " (truncated)" : "") << '\n';
  }
};

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(item);
    } else {
      std::size_t pos = 0;
      const auto v = std::stoull(item, &pos);
      if (pos != item.size()) throw CLI::ValidationError("bad list entry '" + item + "'");
      out.push_back(static_cast<T>(v));
    }
  }
  return out;
}

struct Suite {
  std::string data, ns = "250,500,1000,2000", seeds = "0,1,2", modes = "sim-fsvgd,fsvgd,sim-model", out;
  std::string sac, plant;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t master_seed = 0;
  bool no_policy = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("suite", "Sweep modes, training-set sizes and seeds");
    c->add_option("--data", data, "transitions CSV")->required();
    c->add_option("--ns", ns, "comma-separated training-set sizes");
    c->add_option("--seeds", seeds, "comma-separated seeds");
    c->add_option("--modes", modes, "comma-separated modes");
    c->add_option("--out", out, "results directory")->required();
    c->add_option("--sac-config", sac, "SAC config for the model-based policies");
    c->add_option("--plant", plant, "plant config for tracking");
    c->add_option("--jobs", jobs, "parallel cells");
    c->add_option("--master-seed", master_seed);
    c->add_flag("--no-policy", no_policy, "models and test NLL only");
    c->callback([this] { run(); });
  }
  void run() const {
    experiments::SuiteConfig cfg;
    cfg.ns = parse_list<std::size_t>(ns);
    cfg.seeds = parse_list<std::uint64_t>(seeds);
    cfg.modes = parse_list<std::string>(modes);
    cfg.sac = sac_from(sac);
    cfg.plant = plant_from(plant);
    cfg.jobs = jobs;
    cfg.master_seed = master_seed;
    cfg.train_policies = !no_policy;
    const auto res = experiments::run_suite(read_transitions_csv(data), cfg, out);
    std::cout << "wrote " << res.rows.size() << " rows to " << (fs::path(out) / "suite.csv").string() << '\n';
    if (!res.failures.empty()) std::cout << res.failures.size() << " stage failure(s), see failures.csv\n";
  }
};

struct Report {
  std::string in, out, trajectories;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Render figures and tables from suite results");
    c->add_option("--in", in, "suite.csv")->required();
    c->add_option("--out", out, "figure directory")->required();
    c->add_option("--trajectories", trajectories, "trajectories.csv (default: next to --in)");
    c->callback([this] { run(); });
  }
  void run() const {
    const auto rows = experiments::read_suite_csv(in);
    std::string tpath = trajectories;
    if (tpath.empty()) tpath = (fs::path(in).parent_path() / "trajectories.csv").string();
    std::vector<experiments::CellTrajectory> trajs;
    if (fs::exists(tpath)) trajs = experiments::read_trajectories_csv(tpath);
    for (const auto& f : experiments::render_report(rows, trajs, out)) std::cout << (fs::path(out) / f).string() << '\n';
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mblab: model-based RL lab for a simulated legged manipulator"};
  app.require_subcommand(1);
  Collect collect;
  TrainBnn train_bnn;
  FitSim fit_sim;
  TrainPolicy train_policy;
  Track track;
  Suite suite;
  Report report;
  collect.add(app);
  train_bnn.add(app);
  fit_sim.add(app);
  train_policy.add(app);
  track.add(app);
  suite.add(app);
  report.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
