#include "mblab/experiments/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mblab/bnn/dynamics_model.hpp"
#include "mblab/core/dataset_csv.hpp"

namespace mblab::experiments {
namespace fs = std::filesystem;

namespace {

struct Cell {
  std::string mode;
  std::size_t n;
  std::uint64_t seed;
};

struct CellOutput {
  std::vector<SuiteRow> rows;
  std::vector<CellFailure> failures;
  std::vector<CellTrajectory> trajectories;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string cell_dir_name(const Cell& c) {
  return c.mode + "_n" + std::to_string(c.n) + "_s" + std::to_string(c.seed);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

CellOutput run_cell(const Cell& cell, const DataSplit& split, const SuiteConfig& cfg, const std::string& out_dir) {
  CellOutput out;
  const std::uint64_t cell_seed = derive_seed(cfg.master_seed, {tag("cell"), cell.n, cell.seed});
  const std::string dir = out_dir.empty() ? "" : (fs::path(out_dir) / "cells" / cell_dir_name(cell)).string();
  auto row = [&](const std::string& stage, const std::string& metric, double v, bool trunc) {
    out.rows.push_back({cell.mode, cell.n, cell.seed, stage, metric, v, trunc});
  };
  auto fail = [&](const std::string& stage, const std::string& msg) {
    out.failures.push_back({cell.mode, cell.n, cell.seed, stage, msg});
  };
  const double nan = std::nan("");

  std::shared_ptr<const bnn::DynamicsModel> model;
  try {
    const auto rows = subsample_rows(split.pool.rows(), cell.n, cfg.master_seed, cell.seed);
    const SupervisedSet train = select_rows(split.pool, rows);
    if (cell.mode == kModeSimModel) {
      const auto bounds = kinematics::ParamPrior::defaults();
      const auto fit = kinematics::fit_sim_model(train, bounds.midpoint(), bounds, cfg.fit);
      kinematics::SimModel m{fit.params, kinematics::residual_std(train, fit.params, cfg.fit.dt), cfg.fit.dt};
      row("model", "test_nll", bnn::eval_nll(m, split.test), false);
      if (!dir.empty() && cfg.save_artifacts) bnn::save_sim_model((fs::path(dir) / "model").string(), m);
      model = std::make_shared<bnn::SimDynamicsModel>(std::move(m));
    } else {
      const bnn::Mode mode = bnn::mode_from_string(cell.mode);
      auto res = bnn::train_bnn(train, mode, cfg.bnn, cell_seed);
      row("model", "test_nll", bnn::eval_nll(res.ensemble, split.test), false);
      if (!dir.empty() && cfg.save_artifacts) bnn::save_ensemble((fs::path(dir) / "model").string(), res.ensemble);
      model = std::make_shared<bnn::EnsembleModel>(std::move(res.ensemble));
    }
  } catch (const std::exception& e) {
    row("model", "test_nll", nan, false);
    fail("model", e.what());
  }
  if (!cfg.train_policies) return out;

  const std::vector<ReferenceParams> shapes{cfg.ellipse, cfg.helix};
  auto failed_tracking = [&](const std::string& stage, const std::string& msg) {
    for (const auto& s : shapes) row("track", to_string(s.kind) + "_error", nan, false);
    fail(stage, msg);
  };
  if (!model) {
    failed_tracking("policy", "no model");
    return out;
  }
  policy::Policy pol;
  try {
    const auto factory =
        policy::model_env_factory(model, cfg.workspace, cfg.reward, cfg.sac.episode_length, cfg.plant.safety_bound);
    pol = policy::sac_train(factory, cfg.sac, cfg.plant.command_limits, cell_seed).policy;
    if (!dir.empty() && cfg.save_artifacts) policy::save_policy((fs::path(dir) / "policy").string(), pol);
  } catch (const std::exception& e) {
    failed_tracking("policy", e.what());
    return out;
  }
  for (const auto& s : shapes) {
    const std::string metric = to_string(s.kind) + "_error";
    try {
      const auto traj = make_reference(s);
      RunReport rep = track(pol, cfg.plant, traj, derive_seed(cell_seed, {tag("track"), tag(metric.c_str())}));
      row("track", metric, rep.mean_error, rep.truncated);
      out.trajectories.push_back({cell.mode, cell.n, cell.seed, std::move(rep)});
    } catch (const std::exception& e) {
      row("track", metric, nan, false);
      fail("track", e.what());
    }
  }
  return out;
}

}  // namespace

void SuiteConfig::validate() const {
  if (ns.empty() || seeds.empty() || modes.empty()) throw std::invalid_argument("suite: empty grid");
  for (const auto& m : modes) {
    if (m != kModeSimFsvgd && m != kModeFsvgd && m != kModeSimModel) {
      throw std::invalid_argument("suite: unknown mode '" + m + "'");
    }
  }
  for (std::size_t n : ns) {
    if (n == 0) throw std::invalid_argument("suite: N must be positive");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("suite: test_fraction in (0, 1)");
  if (jobs == 0) throw std::invalid_argument("suite: jobs must be positive");
  bnn.validate();
  sac.validate();
  plant.validate();
  workspace.validate();
  reward.validate();
  ellipse.validate();
  helix.validate();
}

DataSplit split_by_episode(const std::vector<Transition>& transitions, double test_fraction) {
  std::map<std::int64_t, std::vector<Transition>> episodes;
  for (const auto& t : transitions) episodes[t.episode].push_back(t);
  if (episodes.size() < 2) throw std::invalid_argument("split: need at least two episodes");
  const auto e = episodes.size();
  const auto n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(e))), 1, e - 1);
  std::vector<Transition> pool, test;
  std::size_t i = 0;
  for (auto& [id, steps] : episodes) {
    std::sort(steps.begin(), steps.end(), [](const Transition& a, const Transition& b) { return a.step < b.step; });
    auto& dst = i++ < e - n_test ? pool : test;
    dst.insert(dst.end(), steps.begin(), steps.end());
  }
  return {build_supervised(pool), build_supervised(test)};
}

std::vector<std::size_t> subsample_rows(std::size_t pool_rows, std::size_t n, std::uint64_t master_seed,
                                        std::uint64_t seed) {
  if (n > pool_rows) {
    throw std::invalid_argument("subsample: N = " + std::to_string(n) + " exceeds the pool of " +
                                std::to_string(pool_rows) + " rows");
  }
  return sample_indices(pool_rows, n, derive_seed(master_seed, {tag("subsample"), n, seed}));
}

SuiteResult run_suite(const std::vector<Transition>& data, const SuiteConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const DataSplit split = split_by_episode(data, cfg.test_fraction);
  std::vector<Cell> cells;
  for (const auto& m : cfg.modes) {
    for (std::size_t n : cfg.ns) {
      for (std::uint64_t s : cfg.seeds) cells.push_back({m, n, s});
    }
  }
  std::vector<CellOutput> outputs(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) outputs[i] = run_cell(cells[i], split, cfg, out_dir);
  };
  const std::size_t jobs = std::min(cfg.jobs, cells.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SuiteResult res;
  for (auto& o : outputs) {
    res.rows.insert(res.rows.end(), o.rows.begin(), o.rows.end());
    res.failures.insert(res.failures.end(), o.failures.begin(), o.failures.end());
    for (auto& t : o.trajectories) res.trajectories.push_back(std::move(t));
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream suite(fs::path(out_dir) / "suite.csv");
    write_suite_csv(suite, res.rows);
    std::ofstream summary(fs::path(out_dir) / "summary.csv");
    write_summary_csv(summary, summarize(res.rows));
    std::ofstream traj(fs::path(out_dir) / "trajectories.csv");
    write_trajectories_csv(traj, res.trajectories);
    std::ofstream failures(fs::path(out_dir) / "failures.csv");
    failures << "mode,n,seed,stage,message\n";
    for (const auto& f : res.failures) {
      std::string msg = f.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      failures << f.mode << ',' << f.n << ',' << f.seed << ',' << f.stage << ',' << msg << '\n';
    }
    if (!suite || !summary || !traj || !failures) throw std::runtime_error("suite: cannot write to " + out_dir);
  }
  return res;
}

void write_suite_csv(std::ostream& out, const std::vector<SuiteRow>& rows) {
  out << kSuiteHeader << '\n';
  for (const auto& r : rows) {
    out << r.mode << ',' << r.n << ',' << r.seed << ',' << r.stage << ',' << r.metric << ','
        << format_double(r.value) << ',' << (r.truncated ? 1 : 0) << '\n';
  }
}

std::vector<SuiteRow> read_suite_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSuiteHeader) throw std::invalid_argument("suite csv: bad header");
  std::vector<SuiteRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw std::invalid_argument("suite csv line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      SuiteRow r;
      r.mode = f[0];
      r.n = static_cast<std::size_t>(std::stoull(f[1]));
      r.seed = std::stoull(f[2]);
      r.stage = f[3];
      r.metric = f[4];
      r.value = parse_double(f[5]);
      if (f[6] != "0" && f[6] != "1") throw std::invalid_argument("truncated must be 0 or 1");
      r.truncated = f[6] == "1";
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::invalid_argument("suite csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<SuiteRow> read_suite_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_suite_csv(in);
}

std::vector<SummaryRow> summarize(const std::vector<SuiteRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.mode == r.mode && s.n == r.n && s.stage == r.stage && s.metric == r.metric;
    });
    if (it == out.end()) {
      out.push_back({r.mode, r.n, r.stage, r.metric});
      values.emplace_back();
      it = out.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - out.begin());
    if (r.truncated) ++it->truncated;
    if (std::isfinite(r.value)) values[k].push_back(r.value);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    const auto& v = values[k];
    s.count = v.size();
    if (v.empty()) {
      s.mean = s.median = s.min = s.max = std::nan("");
      continue;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.median = median_of(v);
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "mode,n,stage,metric,count,truncated,mean,median,min,max\n";
  for (const auto& s : rows) {
    out << s.mode << ',' << s.n << ',' << s.stage << ',' << s.metric << ',' << s.count << ',' << s.truncated << ','
        << format_double(s.mean) << ',' << format_double(s.median) << ',' << format_double(s.min) << ','
        << format_double(s.max) << '\n';
  }
}

void write_trajectories_csv(std::ostream& out, const std::vector<CellTrajectory>& trajectories) {
  out << "mode,n,seed,shape,t,goal_x,goal_y,goal_z,ee_x,ee_y,ee_z,truncated\n";
  for (const auto& c : trajectories) {
    for (std::size_t t = 0; t < c.run.realized.size(); ++t) {
      const auto& g = c.run.goals[t];
      const auto& p = c.run.realized[t];
      out << c.mode << ',' << c.n << ',' << c.seed << ',' << c.run.shape << ',' << t;
      for (double v : {g[0], g[1], g[2], p[0], p[1], p[2]}) out << ',' << format_double(v);
      out << ',' << (c.run.truncated ? 1 : 0) << '\n';
    }
  }
}

std::vector<CellTrajectory> read_trajectories_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<CellTrajectory> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 12) {
      throw std::invalid_argument("trajectories csv line " + std::to_string(line_no) + ": expected 12 fields");
    }
    const std::size_t n = std::stoull(f[1]);
    const std::uint64_t seed = std::stoull(f[2]);
    const std::size_t t = std::stoull(f[4]);
    if (t == 0 || out.empty() || out.back().mode != f[0] || out.back().n != n || out.back().seed != seed ||
        out.back().run.shape != f[3]) {
      out.push_back({f[0], n, seed, RunReport{}});
      out.back().run.shape = f[3];
    }
    auto& run = out.back().run;
    run.goals.push_back({parse_double(f[5]), parse_double(f[6]), parse_double(f[7])});
    run.realized.push_back({parse_double(f[8]), parse_double(f[9]), parse_double(f[10])});
    run.truncated = f[11] == "1";
    run.steps = run.realized.size() - 1;
  }
  for (auto& c : out) {
    if (c.run.realized.size() >= 2) c.run.mean_error = mean_tracking_error(c.run.realized, c.run.goals);
  }
  return out;
}

}  // namespace mblab::experiments
