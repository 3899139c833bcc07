#include "mblab/bnn/prior.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mblab/core/errors.hpp"
#include "mblab/kinematics/sim_model.hpp"

namespace mblab::bnn {
namespace {

RowMatrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  RowMatrix z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  return z;
}

}  // namespace

void GapPriorConfig::validate() const {
  if (!(lengthscale > 0.0)) throw std::invalid_argument("gap prior: lengthscale must be positive");
  if (!(outputscale >= 0.0)) throw std::invalid_argument("gap prior: outputscale must be non-negative");
}

Eigen::MatrixXd se_kernel(const RowMatrix& a, const RowMatrix& b, const GapPriorConfig& cfg) {
  cfg.validate();
  if (a.cols() != b.cols()) throw std::invalid_argument("se_kernel: column mismatch");
  const double inv = 1.0 / (2.0 * cfg.lengthscale * cfg.lengthscale);
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      k(i, j) = cfg.outputscale * std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv);
    }
  }
  return k;
}

Eigen::MatrixXd gram(const RowMatrix& h, double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("gram: bandwidth must be positive");
  const Eigen::Index n = h.rows();
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = std::exp(-(h.row(i) - h.row(j)).squaredNorm() * inv);
    }
  }
  return k;
}

Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(const Eigen::MatrixXd& m, double jitter, int max_tries) {
  if (m.rows() != m.cols()) throw std::invalid_argument("factor_with_jitter: matrix not square");
  double j = jitter;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Eigen::MatrixXd a = m;
    a.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().allFinite()) return llt;
    j = j > 0.0 ? j * 10.0 : 1e-12;
  }
  throw NumericalError("cholesky", "factorization failed after " + std::to_string(max_tries) +
                                       " jitter escalations (last jitter " + std::to_string(j / 10.0) + ")");
}

InputBox InputBox::from_data(const RowMatrix& x, double inflation) {
  if (x.rows() == 0) throw std::invalid_argument("InputBox::from_data: empty data");
  InputBox box;
  const Eigen::VectorXd lo = x.colwise().minCoeff().transpose();
  const Eigen::VectorXd hi = x.colwise().maxCoeff().transpose();
  const Eigen::VectorXd pad = 0.5 * inflation * (hi - lo);
  box.lower = lo - pad;
  box.upper = hi + pad;
  return box;
}

bool InputBox::contains(const RowMatrix& x) const {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(i, j) < lower[j] || x(i, j) > upper[j]) return false;
    }
  }
  return true;
}

RowMatrix sample_measurement_set(const InputBox& box, std::size_t k, Rng& rng) {
  if (k == 0) throw std::invalid_argument("sample_measurement_set: k must be >= 1");
  RowMatrix x(static_cast<Eigen::Index>(k), box.lower.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      x(i, j) = box.lower[j] == box.upper[j] ? box.lower[j] : uniform(rng, box.lower[j], box.upper[j]);
    }
  }
  return x;
}

RowMatrix sample_measurement_set(const InputBox& box, std::size_t k, std::uint64_t seed) {
  Rng rng = make_rng(seed, {tag("measurement_set")});
  return sample_measurement_set(box, k, rng);
}

GapSampler::GapSampler(const RowMatrix& x, const GapPriorConfig& cfg) : k_(x.rows()) {
  cfg.validate();
  if (cfg.outputscale == 0.0) return;
  const auto llt = factor_with_jitter(se_kernel(x, x, cfg), 1e-6 * cfg.outputscale);
  chol_ = llt.matrixL();
}

RowMatrix GapSampler::draw(Rng& rng, std::size_t dims) const {
  const auto d = static_cast<Eigen::Index>(dims);
  if (chol_.size() == 0) return RowMatrix::Zero(k_, d);
  const RowMatrix z = standard_normal_matrix(k_, d, rng);
  return chol_.triangularView<Eigen::Lower>() * z;
}

RowMatrix gp_gap_sample(const RowMatrix& x, const GapPriorConfig& cfg, std::uint64_t seed, std::size_t dims) {
  Rng rng = make_rng(seed, {tag("gap_sample")});
  return GapSampler(x, cfg).draw(rng, dims);
}

std::vector<RowMatrix> sim_prior_samples(const RowMatrix& x, const Normalizer& norm,
                                         const kinematics::ParamPrior& prior, const GapPriorConfig& gap,
                                         double dt, std::size_t count, Rng& rng) {
  if (static_cast<std::size_t>(x.cols()) != kInputDim) {
    throw std::invalid_argument("sim_prior_samples: inputs must have 31 columns");
  }
  prior.validate();
  const RowMatrix raw = norm.x_to_raw(x);
  const GapSampler sampler(x, gap);
  std::vector<RowMatrix> out;
  out.reserve(count);
  RowMatrix g(x.rows(), static_cast<Eigen::Index>(kEncodedDim));
  for (std::size_t m = 0; m < count; ++m) {
    const kinematics::KinematicParams phi = kinematics::sample_params(prior, rng);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const auto d = kinematics::predict_from_input(std::span<const double, kInputDim>(raw.row(i).data(), kInputDim),
                                                    phi, dt);
      for (std::size_t j = 0; j < kEncodedDim; ++j) g(i, static_cast<Eigen::Index>(j)) = d[j];
    }
    out.push_back(norm.y_to_norm(g) + sampler.draw(rng));
  }
  return out;
}

RowMatrix sim_prior_sample(const RowMatrix& x, const kinematics::ParamPrior& prior, const GapPriorConfig& gap,
                           std::uint64_t seed, double dt) {
  Rng rng = make_rng(seed, {tag("sim_prior_sample")});
  return sim_prior_samples(x, Normalizer::identity(), prior, gap, dt, 1, rng).front();
}

PriorGaussian make_prior_gaussian(std::vector<Eigen::VectorXd> mean, std::vector<Eigen::MatrixXd> cov) {
  if (mean.size() != cov.size()) throw std::invalid_argument("make_prior_gaussian: size mismatch");
  PriorGaussian pg;
  pg.mean = std::move(mean);
  pg.cov = std::move(cov);
  for (const auto& c : pg.cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw NumericalError("prior gaussian", "covariance not positive definite");
    pg.chol.push_back(std::move(llt));
  }
  return pg;
}

PriorGaussian estimate_prior_gaussian(const std::vector<RowMatrix>& samples, double jitter) {
  if (samples.size() < 2) throw std::invalid_argument("estimate_prior_gaussian: need at least two samples");
  const Eigen::Index k = samples[0].rows();
  const Eigen::Index dims = samples[0].cols();
  const auto p = static_cast<Eigen::Index>(samples.size());
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
  Eigen::MatrixXd centred(k, p);
  for (Eigen::Index d = 0; d < dims; ++d) {
    for (Eigen::Index m = 0; m < p; ++m) {
      const RowMatrix& s = samples[static_cast<std::size_t>(m)];
      if (s.rows() != k || s.cols() != dims) throw std::invalid_argument("estimate_prior_gaussian: shape mismatch");
      centred.col(m) = s.col(d);
    }
    Eigen::VectorXd mu = centred.rowwise().mean();
    centred.colwise() -= mu;
    Eigen::MatrixXd c = centred * centred.transpose() / static_cast<double>(p - 1);
    c = 0.5 * (c + c.transpose());
    c.diagonal().array() += jitter;
    mean.push_back(std::move(mu));
    cov.push_back(std::move(c));
  }
  PriorGaussian pg;
  pg.mean = std::move(mean);
  pg.cov = std::move(cov);
  for (const auto& c : pg.cov) pg.chol.push_back(factor_with_jitter(c, 0.0));
  return pg;
}

double gaussian_log_density(const PriorGaussian& pg, const RowMatrix& h) {
  const auto k = static_cast<double>(pg.points());
  double total = 0.0;
  for (std::size_t d = 0; d < pg.dims(); ++d) {
    const Eigen::VectorXd r = h.col(static_cast<Eigen::Index>(d)) - pg.mean[d];
    const Eigen::MatrixXd l = pg.chol[d].matrixL();
    const Eigen::VectorXd w = l.triangularView<Eigen::Lower>().solve(r);
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    total += -0.5 * w.squaredNorm() - 0.5 * logdet - 0.5 * k * std::log(2.0 * std::numbers::pi);
  }
  return total;
}

RowMatrix gaussian_score(const PriorGaussian& pg, const RowMatrix& h) {
  if (static_cast<std::size_t>(h.rows()) != pg.points() || static_cast<std::size_t>(h.cols()) != pg.dims()) {
    throw std::invalid_argument("gaussian_score: shape mismatch");
  }
  RowMatrix s(h.rows(), h.cols());
  for (std::size_t d = 0; d < pg.dims(); ++d) {
    const auto c = static_cast<Eigen::Index>(d);
    s.col(c) = -pg.chol[d].solve(Eigen::VectorXd(h.col(c) - pg.mean[d]));
  }
  if (!s.allFinite()) throw NumericalError("gaussian_score", "non-finite score");
  return s;
}

void add_gap_covariance(PriorGaussian& pg, const RowMatrix& x, const GapPriorConfig& gap) {
  gap.validate();
  if (static_cast<std::size_t>(x.rows()) != pg.points()) throw std::invalid_argument("add_gap_covariance: shape mismatch");
  if (gap.outputscale == 0.0) return;
  const Eigen::MatrixXd k = se_kernel(x, x, gap);
  for (std::size_t d = 0; d < pg.dims(); ++d) {
    pg.cov[d] += k;
    pg.chol[d] = factor_with_jitter(pg.cov[d], 0.0);
  }
}

GpPriorScore::GpPriorScore(const RowMatrix& x, const GapPriorConfig& cfg) {
  cfg.validate();
  if (!(cfg.outputscale > 0.0)) throw std::invalid_argument("GP prior score needs a positive outputscale");
  chol_ = factor_with_jitter(se_kernel(x, x, cfg), 1e-6 * cfg.outputscale);
}

RowMatrix GpPriorScore::operator()(const RowMatrix& h) const {
  if (h.rows() != chol_.rows()) throw std::invalid_argument("GP prior score: shape mismatch");
  RowMatrix s(h.rows(), h.cols());
  const Eigen::MatrixXd hc = h;
  s = -chol_.solve(hc);
  return s;
}

RowMatrix fsvgd_prior_score(const RowMatrix& x, const GapPriorConfig& cfg, const RowMatrix& h) {
  return GpPriorScore(x, cfg)(h);
}

}  // namespace mblab::bnn
