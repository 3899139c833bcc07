#include "mblab/bnn/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "mblab/core/dataset_csv.hpp"
#include "mblab/core/errors.hpp"

namespace mblab::bnn {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

RowMatrix stack_rows(const RowMatrix& a, const RowMatrix& b) {
  RowMatrix out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

RowMatrix select(const RowMatrix& m, const std::vector<std::size_t>& idx) {
  RowMatrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::kFsvgd ? "fsvgd" : "sim-fsvgd"; }

Mode mode_from_string(const std::string& s) {
  if (s == "fsvgd") return Mode::kFsvgd;
  if (s == "sim-fsvgd") return Mode::kSimFsvgd;
  throw std::invalid_argument("unknown BNN mode '" + s + "' (expected fsvgd or sim-fsvgd)");
}

void BnnConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("bnn config: need at least one hidden layer");
  if (particles == 0) throw std::invalid_argument("bnn config: particles must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("bnn config: batch_size must be >= 1");
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) throw std::invalid_argument("bnn config: negative lr or weight decay");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bnn config: bandwidth must be positive");
  if (!(std_min > 0.0) || !(std_max >= std_min)) throw std::invalid_argument("bnn config: bad std bounds");
  if (!(init_std > 0.0)) throw std::invalid_argument("bnn config: init_std must be positive");
  if (fsvgd_points == 0 || sim_points == 0) throw std::invalid_argument("bnn config: measurement sets need k >= 1");
  if (function_samples < 2) throw std::invalid_argument("bnn config: need at least two function samples");
  fsvgd_prior.validate();
  sim_gap.validate();
  sim_params.validate();
}

Ensemble::Ensemble(diffcore::Mlp net, Normalizer norm, std::vector<diffcore::Vector> params, RowMatrix log_std)
    : net_(std::move(net)), norm_(std::move(norm)), params_(std::move(params)), log_std_(std::move(log_std)) {
  if (params_.empty()) throw std::invalid_argument("Ensemble: need at least one particle");
  if (net_.input_dim() != kInputDim || net_.output_dim() != kEncodedDim) {
    throw std::invalid_argument("Ensemble: network must map 31 inputs to 13 outputs");
  }
  for (const auto& p : params_) {
    if (static_cast<std::size_t>(p.size()) != net_.num_params()) throw std::invalid_argument("Ensemble: bad particle size");
  }
  if (static_cast<std::size_t>(log_std_.rows()) != params_.size() ||
      static_cast<std::size_t>(log_std_.cols()) != kEncodedDim) {
    throw std::invalid_argument("Ensemble: log_std must be L x 13");
  }
}

Ensemble Ensemble::initialize(const BnnConfig& cfg, Normalizer norm, Rng& rng) {
  std::vector<std::size_t> widths{kInputDim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(kEncodedDim);
  diffcore::Mlp net(widths, diffcore::Activation::kLeakyRelu);
  std::vector<diffcore::Vector> params;
  for (std::size_t l = 0; l < cfg.particles; ++l) params.push_back(net.init(rng));
  RowMatrix log_std(static_cast<Eigen::Index>(cfg.particles), static_cast<Eigen::Index>(kEncodedDim));
  for (Eigen::Index j = 0; j < log_std.cols(); ++j) {
    const double s = std::clamp(cfg.init_std * norm.y_std[j], cfg.std_min, cfg.std_max);
    log_std.col(j).setConstant(std::log(s));
  }
  return Ensemble(std::move(net), std::move(norm), std::move(params), std::move(log_std));
}

RowMatrix Ensemble::predict_mean(std::size_t l, const RowMatrix& x) const {
  return norm_.y_to_raw(net_.forward(params_.at(l), norm_.x_to_norm(x)));
}

Eigen::RowVectorXd Ensemble::stddev(std::size_t l) const {
  return log_std_.row(static_cast<Eigen::Index>(l)).array().exp();
}

Prediction predict(const Ensemble& e, std::span<const double, kInputDim> x) {
  RowMatrix row(1, static_cast<Eigen::Index>(kInputDim));
  std::copy(x.begin(), x.end(), row.data());
  Prediction p;
  p.means.resize(static_cast<Eigen::Index>(e.size()), static_cast<Eigen::Index>(kEncodedDim));
  p.stds.resize(p.means.rows(), p.means.cols());
  for (std::size_t l = 0; l < e.size(); ++l) {
    p.means.row(static_cast<Eigen::Index>(l)) = e.predict_mean(l, row).row(0);
    p.stds.row(static_cast<Eigen::Index>(l)) = e.stddev(l);
  }
  return p;
}

double mixture_nll(const std::vector<RowMatrix>& means, const std::vector<Eigen::RowVectorXd>& stds,
                   const RowMatrix& y) {
  if (means.empty() || means.size() != stds.size()) throw std::invalid_argument("mixture_nll: bad member lists");
  if (y.rows() == 0) throw std::invalid_argument("mixture_nll: empty data");
  const auto members = means.size();
  std::vector<double> lp(members);
  double total = 0.0;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (std::size_t m = 0; m < members; ++m) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const double sd = stds[m][j];
        const double z = (y(r, j) - means[m](r, j)) / sd;
        s += -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
      }
      lp[m] = s;
    }
    const double mx = *std::max_element(lp.begin(), lp.end());
    double acc = 0.0;
    for (double v : lp) acc += std::exp(v - mx);
    total -= mx + std::log(acc) - std::log(static_cast<double>(members));
  }
  return total / static_cast<double>(y.rows());
}

double eval_nll(const Ensemble& e, const SupervisedSet& data) {
  if (data.empty()) throw std::invalid_argument("eval_nll: empty data");
  std::vector<RowMatrix> means;
  std::vector<Eigen::RowVectorXd> stds;
  for (std::size_t l = 0; l < e.size(); ++l) {
    means.push_back(e.predict_mean(l, data.x));
    stds.push_back(e.stddev(l));
  }
  return mixture_nll(means, stds, data.y);
}

double eval_nll(const kinematics::SimModel& m, const SupervisedSet& data) {
  if (data.empty()) throw std::invalid_argument("eval_nll: empty data");
  RowMatrix pred(data.y.rows(), data.y.cols());
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    const auto d = m.predict(std::span<const double, kInputDim>(data.x.row(r).data(), kInputDim));
    for (std::size_t j = 0; j < kEncodedDim; ++j) pred(r, static_cast<Eigen::Index>(j)) = d[j];
  }
  Eigen::RowVectorXd sd(static_cast<Eigen::Index>(kEncodedDim));
  for (std::size_t j = 0; j < kEncodedDim; ++j) sd[static_cast<Eigen::Index>(j)] = m.residual_std[j];
  return mixture_nll({pred}, {sd}, data.y);
}

PriorScoreFn make_fsvgd_prior(const GapPriorConfig& cfg) {
  return [cfg](const RowMatrix& x, const std::vector<RowMatrix>& h) {
    const GpPriorScore score(x, cfg);
    std::vector<RowMatrix> out;
    for (const auto& hl : h) out.push_back(score(hl));
    return out;
  };
}

PriorScoreFn make_sim_prior(const BnnConfig& cfg, const Normalizer& norm, Rng& rng) {
  return [cfg, norm, &rng](const RowMatrix& x, const std::vector<RowMatrix>& h) {
    const GapPriorConfig sampled = cfg.gap_in_closed_form ? GapPriorConfig{cfg.sim_gap.lengthscale, 0.0} : cfg.sim_gap;
    const auto samples = sim_prior_samples(x, norm, cfg.sim_params, sampled, cfg.dt, cfg.function_samples, rng);
    PriorGaussian pg = estimate_prior_gaussian(samples);
    if (cfg.gap_in_closed_form) add_gap_covariance(pg, x, cfg.sim_gap);
    std::vector<RowMatrix> out;
    for (const auto& hl : h) out.push_back(gaussian_score(pg, hl));
    return out;
  };
}

SvgdGradients svgd_gradients(const Ensemble& e, const RowMatrix& xb, const RowMatrix& yb, const RowMatrix& x_meas,
                             const PriorScoreFn& prior, const SvgdOptions& opt) {
  const std::size_t L = e.size();
  const Eigen::Index B = xb.rows();
  const Eigen::Index K = x_meas.rows();
  if (B == 0 || yb.rows() != B) throw std::invalid_argument("svgd: empty or mismatched batch");
  const RowMatrix xs = stack_rows(xb, x_meas);
  const double lik_scale = opt.likelihood_exponent * static_cast<double>(opt.n_total) / static_cast<double>(B);
  const Eigen::RowVectorXd& y_std = e.normalizer().y_std;

  std::vector<diffcore::Mlp::Tape> tapes(L);
  std::vector<RowMatrix> h(L);
  SvgdGradients out;
  out.log_std_grad.resize(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(kEncodedDim));
  std::vector<RowMatrix> score(L);
  for (std::size_t l = 0; l < L; ++l) {
    e.net().forward(e.params(l), xs, h[l], &tapes[l]);
    const Eigen::RowVectorXd sd = e.stddev(l).array() / y_std.array();
    const Eigen::RowVectorXd inv_var = sd.array().square().inverse();
    const RowMatrix resid = yb - h[l].topRows(B);
    score[l] = RowMatrix::Zero(B + K, static_cast<Eigen::Index>(kEncodedDim));
    score[l].topRows(B) = lik_scale * (resid.array().rowwise() * inv_var.array()).matrix();
    const Eigen::ArrayXXd z2 = resid.array().square().rowwise() * inv_var.array();
    out.batch_nll += (0.5 * z2.rowwise().sum().mean() + sd.array().log().sum() +
                      kHalfLog2Pi * static_cast<double>(kEncodedDim)) /
                     static_cast<double>(L);
    out.log_std_grad.row(static_cast<Eigen::Index>(l)) = (1.0 - z2.colwise().mean()).matrix();
  }
  const auto prior_scores = prior(xs, h);
  if (prior_scores.size() != L) throw std::invalid_argument("svgd: prior returned wrong number of scores");
  for (std::size_t l = 0; l < L; ++l) score[l] += prior_scores[l];

  const Eigen::Index width = (B + K) * static_cast<Eigen::Index>(kEncodedDim);
  RowMatrix flat(static_cast<Eigen::Index>(L), width);
  for (std::size_t l = 0; l < L; ++l) flat.row(static_cast<Eigen::Index>(l)) = Eigen::Map<const Eigen::RowVectorXd>(h[l].data(), width);
  const Eigen::MatrixXd gm = gram(flat, opt.bandwidth);
  const double inv_bw2 = 1.0 / (opt.bandwidth * opt.bandwidth);

  const double n = static_cast<double>(std::max<std::size_t>(opt.n_total, 1));
  for (std::size_t l = 0; l < L; ++l) {
    RowMatrix phi = RowMatrix::Zero(B + K, static_cast<Eigen::Index>(kEncodedDim));
    for (std::size_t i = 0; i < L; ++i) {
      const double k = gm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
      phi += k * score[i];
      if (i != l) phi += (k * inv_bw2) * (h[l] - h[i]);
    }
    phi /= static_cast<double>(L);
    diffcore::Vector g = diffcore::Vector::Zero(static_cast<Eigen::Index>(e.net().num_params()));
    const RowMatrix up = -phi / n;
    e.net().backward(e.params(l), tapes[l], up, g);
    out.param_grad.push_back(std::move(g));
    out.direction.push_back(std::move(phi));
  }
  return out;
}

SvgdState::SvgdState(const Ensemble& e) {
  for (std::size_t l = 0; l < e.size(); ++l) {
    params.emplace_back(static_cast<Eigen::Index>(e.net().num_params()));
    log_std.emplace_back(static_cast<Eigen::Index>(kEncodedDim));
  }
}

StepReport svgd_update(Ensemble& e, SvgdState& state, const RowMatrix& xb, const RowMatrix& yb,
                       const RowMatrix& x_meas, const PriorScoreFn& prior, const SvgdOptions& opt) {
  StepReport report;
  SvgdGradients g;
  try {
    g = svgd_gradients(e, xb, yb, x_meas, prior, opt);
  } catch (const NumericalError& err) {
    report.applied = false;
    report.message = err.what();
    return report;
  }
  report.batch_nll = g.batch_nll;
  bool finite = g.log_std_grad.allFinite() && std::isfinite(g.batch_nll);
  for (const auto& pg : g.param_grad) finite = finite && pg.allFinite();
  if (!finite) {
    report.applied = false;
    report.message = "non-finite SVGD update skipped";
    return report;
  }
  diffcore::AdamConfig std_cfg = opt.adam;
  std_cfg.weight_decay = 0.0;
  const double lo = std::log(opt.std_min);
  const double hi = std::log(opt.std_max);
  for (std::size_t l = 0; l < e.size(); ++l) {
    diffcore::adam_step(state.params[l], e.params(l), g.param_grad[l], opt.adam);
    Eigen::VectorXd ls = e.log_std().row(static_cast<Eigen::Index>(l)).transpose();
    diffcore::adam_step(state.log_std[l], ls, g.log_std_grad.row(static_cast<Eigen::Index>(l)).transpose(), std_cfg);
    e.log_std().row(static_cast<Eigen::Index>(l)) = ls.transpose().array().min(hi).max(lo).matrix();
  }
  return report;
}

std::size_t planned_steps(std::size_t n, const BnnConfig& cfg) {
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  return std::min(cfg.epochs * per_epoch, cfg.max_steps);
}

TrainResult train_bnn(const SupervisedSet& train, Mode mode, const BnnConfig& cfg, std::uint64_t seed,
                      const SupervisedSet* test) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("train_bnn: empty training set");
  const std::size_t n = train.rows();
  const Normalizer norm = Normalizer::fit(train);
  const RowMatrix xn = norm.x_to_norm(train.x);
  const RowMatrix yn = norm.y_to_norm(train.y);
  const InputBox box = InputBox::from_data(xn, cfg.box_inflation);

  // Initialization and batch order do not depend on the mode, so both modes
  // start from the same particles.
  Rng init_rng = make_rng(seed, {tag("bnn_init")});
  Rng batch_rng = make_rng(seed, {tag("bnn_batches")});
  Rng meas_rng = make_rng(seed, {tag("bnn_measurements")});
  Rng prior_rng = make_rng(seed, {tag("bnn_prior_samples")});

  TrainResult result{Ensemble::initialize(cfg, norm, init_rng), {}, 0, 0, {}};
  SvgdState state(result.ensemble);
  const PriorScoreFn prior =
      mode == Mode::kFsvgd ? make_fsvgd_prior(cfg.fsvgd_prior) : make_sim_prior(cfg, norm, prior_rng);
  const std::size_t k = mode == Mode::kFsvgd ? cfg.fsvgd_points : cfg.sim_points;

  SvgdOptions opt;
  opt.bandwidth = cfg.bandwidth;
  opt.likelihood_exponent = cfg.likelihood_exponent;
  opt.n_total = n;
  opt.std_min = cfg.std_min;
  opt.std_max = cfg.std_max;
  opt.adam.lr = cfg.lr;
  opt.adam.weight_decay = cfg.weight_decay;

  const auto record = [&](std::size_t step) {
    CurveRow row;
    row.step = step;
    row.train_nll = eval_nll(result.ensemble, train);
    row.test_nll = test != nullptr && !test->empty() ? eval_nll(result.ensemble, *test)
                                                     : std::numeric_limits<double>::quiet_NaN();
    result.curve.push_back(row);
  };

  const std::size_t total = planned_steps(n, cfg);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::size_t cursor = n;
  record(0);
  std::vector<std::size_t> idx;
  for (std::size_t step = 1; step <= total; ++step) {
    if (cursor >= n) {
      std::shuffle(order.begin(), order.end(), batch_rng);
      cursor = 0;
    }
    const std::size_t take = std::min(cfg.batch_size, n - cursor);
    idx.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
               order.begin() + static_cast<std::ptrdiff_t>(cursor + take));
    cursor += take;
    const RowMatrix x_meas = sample_measurement_set(box, k, meas_rng);
    const StepReport rep = svgd_update(result.ensemble, state, select(xn, idx), select(yn, idx), x_meas, prior, opt);
    if (!rep.applied) {
      ++result.skipped;
      result.log.push_back("step " + std::to_string(step) + ": " + rep.message);
    }
    result.steps = step;
    if ((cfg.eval_every > 0 && step % cfg.eval_every == 0) || step == total) record(step);
  }
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve) {
  out << "step,train_nll,test_nll\n";
  for (const auto& r : curve) {
    out << r.step << ',' << format_double(r.train_nll) << ',' << (std::isnan(r.test_nll) ? "" : format_double(r.test_nll))
        << '\n';
  }
}

}  // namespace mblab::bnn
