#pragma once

#include <vector>

#include "metasrm/bandit_core.hpp"
#include "metasrm/linalg.hpp"

namespace metasrm {

// Gaussian distribution in (mean, covariance) form. Used for the task prior,
// the within-task posterior and the materialized meta-posterior.
struct GaussianBelief {
  VectorXd mean;
  MatrixXd covariance;

  GaussianBelief(VectorXd m, MatrixXd cov);
  int dim() const { return int(mean.size()); }
};

// One conjugate step for reward y observed on arm feature a with noise
// N(0, sigma^2). Rank-1 (Kalman) form; never inverts the covariance, so
// singular beliefs and zero features are handled exactly.
GaussianBelief within_task_update(const GaussianBelief& belief,
                                  const VectorXd& arm_feature, double reward,
                                  double sigma);

// Sufficient statistics of one completed task: the Gram matrix of pulled
// features and their reward-weighted sum. Diagonal with entries N_a for
// finite-indexed arms.
struct TaskSummary {
  MatrixXd V;
  VectorXd B;
};

TaskSummary summarize_task(const Trajectory& trajectory, const ArmSet& arms);

// Meta-posterior over theta_star in natural (precision) form. The mean is
// re-derived from precision * theta_hat = natural after every update.
class MetaPosteriorState {
 public:
  // Initial state encodes the meta-prior Q exactly; Sigma_q must be PD.
  MetaPosteriorState(const VectorXd& psi_q, const MatrixXd& Sigma_q);

  // Folds one task's summary into the state. The increment is
  //   precision += V/s^2 - (V/s^2) (Sigma0^-1 + V/s^2)^-1 (V/s^2)
  //   natural   += B/s^2 - (V/s^2) (Sigma0^-1 + V/s^2)^-1 (B/s^2)
  // arranged through a factor of V so that singular Sigma0 and singular V
  // are both handled without forming either inverse.
  void update(const TaskSummary& summary, const MatrixXd& Sigma0,
              double sigma);

  const VectorXd& theta_hat() const { return theta_hat_; }
  const MatrixXd& precision() const { return precision_; }
  const VectorXd& natural() const { return natural_; }
  MatrixXd covariance() const;  // precision^-1
  int tasks_seen() const { return tasks_seen_; }

 private:
  MatrixXd precision_;
  VectorXd natural_;
  VectorXd theta_hat_;
  int tasks_seen_ = 0;
};

// Task prior for the next task: N(theta_hat, Sigma_hat + Sigma0).
GaussianBelief uncertainty_adjusted_prior(const MetaPosteriorState& state,
                                          const MatrixXd& Sigma0);

// Independent Beta(alpha_a, beta_a) posterior per arm.
struct BetaBelief {
  std::vector<std::pair<double, double>> per_arm;

  explicit BetaBelief(std::vector<std::pair<double, double>> ab);
  static BetaBelief uniform(int K);  // Beta(1,1) per arm
  int num_arms() const { return int(per_arm.size()); }
};

// Conjugate Beta-Bernoulli step; reward must be exactly 0 or 1.
BetaBelief beta_update(const BetaBelief& belief, int arm, double reward);

}  // namespace metasrm
