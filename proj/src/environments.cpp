#include "metasrm/environments.hpp"

#include <cmath>
#include <stdexcept>

namespace metasrm {

GaussianPriorSpec::GaussianPriorSpec(VectorXd theta, MatrixXd sigma0,
                                     double sigma, ArmSet a)
    : theta_star(std::move(theta)),
      Sigma0(std::move(sigma0)),
      noise_sigma(sigma),
      arms(std::move(a)) {
  if (!(noise_sigma > 0.0)) {
    throw std::invalid_argument("GaussianPriorSpec: sigma must be > 0");
  }
  if (theta_star.size() != arms.dim() || Sigma0.rows() != arms.dim()) {
    throw std::invalid_argument(
        "GaussianPriorSpec: dimensions inconsistent with arm set");
  }
  linalg::require_psd(Sigma0, "GaussianPriorSpec Sigma0");
}

GaussianMetaPriorSpec::GaussianMetaPriorSpec(VectorXd psi, MatrixXd sigma_q)
    : psi_q(std::move(psi)), Sigma_q(std::move(sigma_q)) {
  if (Sigma_q.rows() != psi_q.size()) {
    throw std::invalid_argument("GaussianMetaPriorSpec: dimension mismatch");
  }
  linalg::require_psd(Sigma_q, "GaussianMetaPriorSpec Sigma_q");
}

BetaPriorSpec::BetaPriorSpec(std::vector<std::pair<double, double>> ab)
    : per_arm(std::move(ab)) {
  if (per_arm.empty()) {
    throw std::invalid_argument("BetaPriorSpec: need at least one arm");
  }
  for (const auto& [a, b] : per_arm) {
    if (!(a > 0.0) || !(b > 0.0)) {
      throw std::invalid_argument(
          "BetaPriorSpec: alpha and beta must be > 0");
    }
  }
}

GaussianPriorSpec sample_prior_from_meta(const GaussianMetaPriorSpec& meta,
                                         const MatrixXd& Sigma0,
                                         const ArmSet& arms, double sigma,
                                         Rng& rng) {
  VectorXd theta = linalg::mvn_sample(meta.psi_q, meta.Sigma_q, rng);
  return GaussianPriorSpec(std::move(theta), Sigma0, sigma, arms);
}

TaskInstance sample_task(const GaussianPriorSpec& prior, Rng& rng) {
  VectorXd param = linalg::mvn_sample(prior.theta_star, prior.Sigma0, rng);
  const NoiseModel noise = NoiseModel::gaussian(prior.noise_sigma);
  if (prior.arms.kind() == ArmSet::Kind::FeatureVectors) {
    return TaskInstance(prior.arms, std::move(param), noise);
  }
  return TaskInstance(std::move(param), noise);
}

TaskInstance sample_task(const BetaPriorSpec& prior, Rng& rng) {
  VectorXd means(prior.num_arms());
  for (int a = 0; a < prior.num_arms(); ++a) {
    means[a] = rng.beta(prior.per_arm[a].first, prior.per_arm[a].second);
  }
  return TaskInstance(std::move(means), NoiseModel::bernoulli());
}

double sample_reward(const TaskInstance& task, int arm, Rng& rng) {
  if (arm < 0 || arm >= task.num_arms()) {
    throw std::out_of_range("sample_reward: arm index");
  }
  switch (task.noise().kind) {
    case NoiseModel::Kind::Gaussian:
      return rng.normal(task.mean(arm), task.noise().sigma);
    case NoiseModel::Kind::Bernoulli:
      return rng.bernoulli(task.mean(arm)) ? 1.0 : 0.0;
  }
  throw std::logic_error("sample_reward: unknown noise kind");
}

ArmSet sample_unit_sphere_arms(int K, int d, Rng& rng) {
  if (K < 1 || d < 1) {
    throw std::invalid_argument("sample_unit_sphere_arms: K, d must be >= 1");
  }
  MatrixXd feats(K, d);
  for (int a = 0; a < K; ++a) {
    VectorXd v(d);
    double norm2;
    do {
      for (int i = 0; i < d; ++i) v[i] = rng.normal();
      norm2 = v.squaredNorm();
    } while (norm2 < 1e-24);
    feats.row(a) = v.transpose() / std::sqrt(norm2);
  }
  return ArmSet::features(std::move(feats));
}

MatrixXd block_covariance(int dim, int block_size, double variance,
                          double correlation) {
  if (dim < 1 || block_size < 1 || dim % block_size != 0) {
    throw std::invalid_argument(
        "block_covariance: dim must be a positive multiple of block_size");
  }
  if (!(variance >= 0.0) || correlation < -1.0 || correlation > 1.0) {
    throw std::invalid_argument("block_covariance: invalid parameters");
  }
  MatrixXd m = MatrixXd::Zero(dim, dim);
  for (int b = 0; b < dim / block_size; ++b) {
    const int lo = b * block_size;
    for (int i = 0; i < block_size; ++i) {
      for (int j = 0; j < block_size; ++j) {
        m(lo + i, lo + j) = (i == j) ? variance : variance * correlation;
      }
    }
  }
  return m;
}

}  // namespace metasrm
