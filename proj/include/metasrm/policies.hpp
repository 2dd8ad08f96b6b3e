#pragma once

#include <span>

#include "metasrm/bandit_core.hpp"
#include "metasrm/environments.hpp"
#include "metasrm/posteriors.hpp"

namespace metasrm {

struct PolicyKind {
  enum class Tag { Thompson, BayesUcb };
  Tag tag = Tag::Thompson;
  double delta = 0.1;  // BayesUCB confidence parameter, in (0, 1]

  static PolicyKind thompson() { return {Tag::Thompson, 0.1}; }
  static PolicyKind bayes_ucb(double delta);
};

struct RunOptions {
  // O(1)-per-round arithmetic for finite arms with diagonal covariance;
  // produces bit-identical trajectories to the dense path.
  bool diagonal_fast_path = true;
  // Replace the posterior mean in the UCB index with one posterior sample.
  bool ucb_sampled_mean = false;
};

// Samples one parameter vector from the posterior and returns the
// lowest-index argmax arm under the induced means.
int ts_select(const GaussianBelief& state, const ArmSet& arms, Rng& rng);
int ts_select(const BetaBelief& state, Rng& rng);

// Per-arm information gain 0.5 * log(1 + a^T cov a / sigma^2).
double mutual_information_gain(const GaussianBelief& belief,
                               const VectorXd& arm_feature, double sigma);

// Concentration width for the BayesUCB index:
//   4 * sqrt(s2max / log(1 + s2max / sigma^2) * log(4 K / delta))
// with s2max = max_a a^T cov a. Throws when the covariance is zero along
// every arm (the log-ratio degenerates); callers fall back to exploitation.
double gamma_coefficient(const GaussianBelief& belief, const ArmSet& arms,
                         double sigma, double delta);

// Lowest-index argmax of mean(a) + gamma * sqrt(information gain of a).
int bayes_ucb_select(const GaussianBelief& state, const ArmSet& arms,
                     double sigma, double delta,
                     const RunOptions& options = {}, Rng* rng = nullptr);

struct TaskRunResult {
  Trajectory trajectory;
  int recommended_arm = 0;
};

// Plays one task for n rounds (select -> observe -> conjugate update) and
// recommends by pull frequency. The first forced_prefix.size() rounds pull
// the given arms instead of consulting the policy; their observations still
// enter the posterior and the pull counts.
TaskRunResult run_task(const PolicyKind& policy, const GaussianBelief& start,
                       const ArmSet& arms, const TaskInstance& task,
                       double sigma, int n, Rng& rng,
                       std::span<const int> forced_prefix = {},
                       const RunOptions& options = {});

// Bernoulli-reward variant (Thompson only).
TaskRunResult run_task(const BetaBelief& start, const TaskInstance& task,
                       int n, Rng& rng, std::span<const int> forced_prefix = {});

}  // namespace metasrm
