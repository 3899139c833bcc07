#pragma once

// Function-space prior machinery: kernels, measurement sets, the GP gap
// process, the simulation-plus-gap process and its Gaussian approximation.
//
// Function values at k points for all 13 outputs are stored as a k x 13
// row-major matrix; column i is the vector h_i^X of output dimension i.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "mblab/bnn/normalizer.hpp"
#include "mblab/core/rng.hpp"
#include "mblab/core/types.hpp"
#include "mblab/kinematics/kinematics.hpp"

namespace mblab::bnn {

// k(x, x') = outputscale * exp(-|x - x'|^2 / (2 lengthscale^2)).
struct GapPriorConfig {
  double lengthscale = 1.0;
  double outputscale = 0.2;  // nu^2

  void validate() const;
};

Eigen::MatrixXd se_kernel(const RowMatrix& a, const RowMatrix& b, const GapPriorConfig& cfg);

// K_li = exp(-|h_l - h_i|^2 / (2 bw^2)) between the rows of h.
Eigen::MatrixXd gram(const RowMatrix& h, double bandwidth);

// Cholesky factor of m + jitter * I, multiplying the jitter by 10 on each
// failure. Throws NumericalError after max_tries attempts.
Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(const Eigen::MatrixXd& m, double jitter, int max_tries = 6);

// Axis-aligned box over model inputs.
struct InputBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  // Column-wise min/max of x, each side widened by inflation/2 of the range.
  static InputBox from_data(const RowMatrix& x, double inflation = 0.1);
  bool contains(const RowMatrix& x) const;
};

RowMatrix sample_measurement_set(const InputBox& box, std::size_t k, Rng& rng);
RowMatrix sample_measurement_set(const InputBox& box, std::size_t k, std::uint64_t seed);

// Draws of the zero-mean gap GP at fixed points, independent per output
// dimension. The kernel is factored once, with jitter 1e-6 * nu^2.
class GapSampler {
 public:
  GapSampler(const RowMatrix& x, const GapPriorConfig& cfg);
  // k x dims matrix of independent draws.
  RowMatrix draw(Rng& rng, std::size_t dims = kEncodedDim) const;

 private:
  Eigen::MatrixXd chol_;  // lower factor; empty when nu^2 == 0
  Eigen::Index k_;
};

RowMatrix gp_gap_sample(const RowMatrix& x, const GapPriorConfig& cfg, std::uint64_t seed,
                        std::size_t dims = kEncodedDim);

// P draws of h^X = g(X, phi) + gap with phi ~ prior. X and the gap GP live in
// normalized input space; the kinematic model sees norm.x_to_raw(X) and its
// encoded differences are mapped back through norm.y_to_norm.
std::vector<RowMatrix> sim_prior_samples(const RowMatrix& x, const Normalizer& norm,
                                         const kinematics::ParamPrior& prior, const GapPriorConfig& gap,
                                         double dt, std::size_t count, Rng& rng);

// One draw in raw units.
RowMatrix sim_prior_sample(const RowMatrix& x, const kinematics::ParamPrior& prior, const GapPriorConfig& gap,
                           std::uint64_t seed, double dt = kinematics::kDefaultDt);

// Independent Gaussian per output dimension over the k measurement points.
struct PriorGaussian {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;

  std::size_t points() const { return mean.empty() ? 0 : static_cast<std::size_t>(mean[0].size()); }
  std::size_t dims() const { return mean.size(); }
};

inline constexpr double kPriorJitter = 1e-6;

// Sample mean and covariance (divisor P - 1) per dimension plus jitter on
// the diagonal. Throws std::invalid_argument for fewer than two samples.
PriorGaussian estimate_prior_gaussian(const std::vector<RowMatrix>& samples, double jitter = kPriorJitter);

// Adds the gap kernel K(X, X) to every covariance and refactors. Equivalent
// in expectation to estimating from samples that include gap draws.
void add_gap_covariance(PriorGaussian& pg, const RowMatrix& x, const GapPriorConfig& gap);

PriorGaussian make_prior_gaussian(std::vector<Eigen::VectorXd> mean, std::vector<Eigen::MatrixXd> cov);

// sum_i log N(h_i; mu_i, Sigma_i).
double gaussian_log_density(const PriorGaussian& pg, const RowMatrix& h);

// Column i is -Sigma_i^{-1} (h_i - mu_i).
RowMatrix gaussian_score(const PriorGaussian& pg, const RowMatrix& h);

// Score of the zero-mean GP prior with kernel K(X): column i is -K^{-1} h_i.
class GpPriorScore {
 public:
  GpPriorScore(const RowMatrix& x, const GapPriorConfig& cfg);
  RowMatrix operator()(const RowMatrix& h) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

RowMatrix fsvgd_prior_score(const RowMatrix& x, const GapPriorConfig& cfg, const RowMatrix& h);

}  // namespace mblab::bnn
