#pragma once

// The model-size sweep: for every (mode, N, seed) cell, subsample N training
// rows, fit a dynamics model, score it on held-out episodes, train a policy
// on it and track the reference shapes on the plant.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mblab/bnn/ensemble.hpp"
#include "mblab/experiments/tracking.hpp"
#include "mblab/kinematics/sim_model.hpp"
#include "mblab/policy/sac.hpp"

namespace mblab::experiments {

inline constexpr const char* kModeSimFsvgd = "sim-fsvgd";
inline constexpr const char* kModeFsvgd = "fsvgd";
inline constexpr const char* kModeSimModel = "sim-model";

struct SuiteConfig {
  std::vector<std::size_t> ns{250, 500, 1000, 2000};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::string> modes{kModeSimFsvgd, kModeFsvgd, kModeSimModel};
  std::uint64_t master_seed = 0;
  // Trailing share of episodes held out for the test NLL.
  double test_fraction = 0.2;
  bool train_policies = true;
  // Models and policies of every cell under <out>/cells/.
  bool save_artifacts = true;
  std::size_t jobs = 1;

  bnn::BnnConfig bnn;
  kinematics::FitConfig fit;
  policy::SacConfig sac;
  simenv::PlantConfig plant = simenv::PlantConfig::defaults();
  policy::Workspace workspace;
  policy::RewardConfig reward;
  ReferenceParams ellipse = ReferenceParams::ellipse();
  ReferenceParams helix = ReferenceParams::helix();

  void validate() const;
};

// One line of suite.csv.
struct SuiteRow {
  std::string mode;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string stage;
  std::string metric;
  double value = 0.0;  // NaN when the stage failed
  bool truncated = false;
};

struct CellFailure {
  std::string mode;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string stage;
  std::string message;
};

struct CellTrajectory {
  std::string mode;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  RunReport run;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;  // ordered by (mode, n, seed) as configured
  std::vector<CellFailure> failures;
  std::vector<CellTrajectory> trajectories;
};

struct DataSplit {
  SupervisedSet pool;
  SupervisedSet test;
};

// Episodes in id order; the last ceil(test_fraction * E) go to the test set.
DataSplit split_by_episode(const std::vector<Transition>& transitions, double test_fraction);

// Row indices of the N-row training subsample for a seed; identical for
// every mode.
std::vector<std::size_t> subsample_rows(std::size_t pool_rows, std::size_t n, std::uint64_t master_seed,
                                        std::uint64_t seed);

// Runs every cell. When out_dir is non-empty, writes suite.csv, summary.csv,
// trajectories.csv and failures.csv there.
SuiteResult run_suite(const std::vector<Transition>& data, const SuiteConfig& cfg, const std::string& out_dir = "");

inline constexpr const char* kSuiteHeader = "mode,n,seed,stage,metric,value,truncated";

void write_suite_csv(std::ostream& out, const std::vector<SuiteRow>& rows);
std::vector<SuiteRow> read_suite_csv(std::istream& in);
std::vector<SuiteRow> read_suite_csv(const std::string& path);

struct SummaryRow {
  std::string mode;
  std::size_t n = 0;
  std::string stage;
  std::string metric;
  std::size_t count = 0;  // finite values
  std::size_t truncated = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Mean, median and range over seeds of the finite values per
// (mode, n, stage, metric), in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<SuiteRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

void write_trajectories_csv(std::ostream& out, const std::vector<CellTrajectory>& trajectories);
std::vector<CellTrajectory> read_trajectories_csv(const std::string& path);

}  // namespace mblab::experiments
