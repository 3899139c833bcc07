#pragma once

// Particle ensembles trained with function-space SVGD, with either the
// uninformed GP prior (FSVGD) or the simulation-plus-gap prior (Sim-FSVGD).
//
// Networks work in normalized units: inputs and targets are z-scored with
// statistics of the training set. Each particle carries a learned
// likelihood std per output dimension, stored as a log in raw units.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mblab/bnn/normalizer.hpp"
#include "mblab/bnn/prior.hpp"
#include "mblab/diffcore/adam.hpp"
#include "mblab/diffcore/mlp.hpp"
#include "mblab/kinematics/kinematics.hpp"
#include "mblab/kinematics/sim_model.hpp"

namespace mblab::bnn {

enum class Mode { kFsvgd, kSimFsvgd };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct BnnConfig {
  std::vector<std::size_t> hidden{64, 64, 64};
  std::size_t particles = 5;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 1e-3;
  std::size_t epochs = 100;
  std::size_t max_steps = 200'000;
  double bandwidth = 5.0;
  double likelihood_exponent = 1.0;
  double std_min = 1e-4;  // raw units
  double std_max = 1.0;
  double init_std = 1.0;  // normalized units
  double box_inflation = 0.1;

  std::size_t fsvgd_points = 16;
  GapPriorConfig fsvgd_prior{0.2, 1.0};

  std::size_t sim_points = 64;
  GapPriorConfig sim_gap{1.0, 0.2};
  std::size_t function_samples = 256;
  // Add the gap kernel to the simulator sample covariance instead of
  // sampling gap draws.
  bool gap_in_closed_form = true;
  kinematics::ParamPrior sim_params = kinematics::ParamPrior::defaults();
  double dt = kinematics::kDefaultDt;

  // Curve rows every eval_every steps (0: first and last step only).
  std::size_t eval_every = 100;

  void validate() const;
};

class Ensemble {
 public:
  Ensemble(diffcore::Mlp net, Normalizer norm, std::vector<diffcore::Vector> params, RowMatrix log_std);

  // Fan-in uniform weights per particle, std = init_std in normalized units.
  static Ensemble initialize(const BnnConfig& cfg, Normalizer norm, Rng& rng);

  std::size_t size() const { return params_.size(); }
  const diffcore::Mlp& net() const { return net_; }
  const Normalizer& normalizer() const { return norm_; }
  const diffcore::Vector& params(std::size_t l) const { return params_[l]; }
  diffcore::Vector& params(std::size_t l) { return params_[l]; }
  // L x 13, log of the raw-unit likelihood std.
  const RowMatrix& log_std() const { return log_std_; }
  RowMatrix& log_std() { return log_std_; }

  // Raw-unit encoded differences of particle l for raw inputs x (n x 31).
  RowMatrix predict_mean(std::size_t l, const RowMatrix& x) const;
  Eigen::RowVectorXd stddev(std::size_t l) const;

 private:
  diffcore::Mlp net_;
  Normalizer norm_;
  std::vector<diffcore::Vector> params_;
  RowMatrix log_std_;
};

struct Prediction {
  RowMatrix means;  // L x 13
  RowMatrix stds;   // L x 13

  Eigen::RowVectorXd mean() const { return means.colwise().mean(); }
};

Prediction predict(const Ensemble& e, std::span<const double, kInputDim> x);

// Mean over rows of -log of the equal-weight mixture over members of
// diagonal Gaussians (means[m] is n x 13, stds[m] a 13-vector).
double mixture_nll(const std::vector<RowMatrix>& means, const std::vector<Eigen::RowVectorXd>& stds,
                   const RowMatrix& y);

double eval_nll(const Ensemble& e, const SupervisedSet& data);
double eval_nll(const kinematics::SimModel& m, const SupervisedSet& data);

// Prior score over the stacked points (batch rows, then measurement rows;
// normalized): given X and each particle's function values there, returns
// one score each.
using PriorScoreFn =
    std::function<std::vector<RowMatrix>(const RowMatrix& x_meas, const std::vector<RowMatrix>& h_meas)>;

PriorScoreFn make_fsvgd_prior(const GapPriorConfig& cfg);
// Re-estimates the Gaussian approximation from fresh samples on every call.
PriorScoreFn make_sim_prior(const BnnConfig& cfg, const Normalizer& norm, Rng& rng);

struct SvgdOptions {
  double bandwidth = 5.0;
  double likelihood_exponent = 1.0;
  std::size_t n_total = 1;  // training-set size N
  double std_min = 1e-4;
  double std_max = 1.0;
  diffcore::AdamConfig adam;
};

// Quantities of one SVGD step. The stacked function values of particle l
// are the batch rows followed by the measurement rows.
struct SvgdGradients {
  std::vector<RowMatrix> direction;     // phi_l, stacked (B + k) x 13
  std::vector<diffcore::Vector> param_grad;  // -J_l^T phi_l / N, fed to Adam
  RowMatrix log_std_grad;               // L x 13, gradient of the mean batch NLL
  double batch_nll = 0.0;               // normalized units, mean over particles
};

SvgdGradients svgd_gradients(const Ensemble& e, const RowMatrix& xb, const RowMatrix& yb, const RowMatrix& x_meas,
                             const PriorScoreFn& prior, const SvgdOptions& opt);

struct SvgdState {
  std::vector<diffcore::AdamState> params;
  std::vector<diffcore::AdamState> log_std;

  explicit SvgdState(const Ensemble& e);
};

struct StepReport {
  bool applied = true;
  double batch_nll = 0.0;
  std::string message;
};

// One update on a normalized batch. A non-finite gradient skips the step
// and reports why; the ensemble is left untouched.
StepReport svgd_update(Ensemble& e, SvgdState& state, const RowMatrix& xb, const RowMatrix& yb,
                       const RowMatrix& x_meas, const PriorScoreFn& prior, const SvgdOptions& opt);

struct CurveRow {
  std::size_t step = 0;
  double train_nll = 0.0;
  double test_nll = 0.0;  // NaN without a test set
};

struct TrainResult {
  Ensemble ensemble;
  std::vector<CurveRow> curve;
  std::size_t steps = 0;
  std::size_t skipped = 0;
  std::vector<std::string> log;
};

// min(epochs * ceil(N / batch), max_steps) mini-batch steps over per-epoch
// shuffles; a fresh measurement set every step.
std::size_t planned_steps(std::size_t n, const BnnConfig& cfg);

TrainResult train_bnn(const SupervisedSet& train, Mode mode, const BnnConfig& cfg, std::uint64_t seed,
                      const SupervisedSet* test = nullptr);

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve);

}  // namespace mblab::bnn
