#pragma once

#include <vector>

#include "metasrm/bandit_core.hpp"
#include "metasrm/linalg.hpp"
#include "metasrm/rng.hpp"

namespace metasrm {

// Task prior N(theta_star, Sigma0) with reward noise N(0, sigma^2). For
// finite-indexed arms theta_star has length K; for feature arms length d.
struct GaussianPriorSpec {
  VectorXd theta_star;
  MatrixXd Sigma0;
  double noise_sigma = 1.0;
  ArmSet arms = ArmSet::finite(1);

  GaussianPriorSpec(VectorXd theta, MatrixXd sigma0, double sigma, ArmSet a);
};

// Meta-prior Q = N(psi_q, Sigma_q) over theta_star.
struct GaussianMetaPriorSpec {
  VectorXd psi_q;
  MatrixXd Sigma_q;

  GaussianMetaPriorSpec(VectorXd psi, MatrixXd sigma_q);
};

// Independent Beta(alpha_a, beta_a) prior per arm, Bernoulli rewards.
struct BetaPriorSpec {
  std::vector<std::pair<double, double>> per_arm;

  explicit BetaPriorSpec(std::vector<std::pair<double, double>> ab);
  int num_arms() const { return int(per_arm.size()); }
};

// theta_star ~ N(psi_q, Sigma_q); Sigma0, sigma, arms copied through.
GaussianPriorSpec sample_prior_from_meta(const GaussianMetaPriorSpec& meta,
                                         const MatrixXd& Sigma0,
                                         const ArmSet& arms, double sigma,
                                         Rng& rng);

TaskInstance sample_task(const GaussianPriorSpec& prior, Rng& rng);
TaskInstance sample_task(const BetaPriorSpec& prior, Rng& rng);

double sample_reward(const TaskInstance& task, int arm, Rng& rng);

// K arms drawn uniformly from the unit sphere in R^d (normalized Gaussians).
ArmSet sample_unit_sphere_arms(int K, int d, Rng& rng);

// Block-diagonal covariance of equally sized blocks with common per-entry
// variance and within-block correlation.
MatrixXd block_covariance(int dim, int block_size, double variance,
                          double correlation);

}  // namespace metasrm
