#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metasrm/policies.hpp"

namespace metasrm {

// Environment knowns shared by the Gaussian-family learners: the arm set,
// the (known) task-prior covariance and the reward noise level.
struct GaussianEnv {
  ArmSet arms;
  MatrixXd Sigma0;
  double sigma = 1.0;
};

struct ExploreStrategy {
  enum class Tag { None, BernoulliBatched, LinearBasis };
  Tag tag = Tag::None;
  int t0 = 2;  // pulls per exploration task (BernoulliBatched)
  int m0 = 0;  // exploration tasks

  static ExploreStrategy none() { return {}; }
  static ExploreStrategy bernoulli_batched(int t0, int m0);
  static ExploreStrategy linear_basis(int m0);
};

using BetaParams = std::vector<std::pair<double, double>>;

// Arm/reward triples collected during exploration rounds, across tasks.
struct ExplorationDataset {
  struct Entry {
    int task;
    int arm;
    double reward;
  };
  std::vector<Entry> entries;

  void append(int task, int arm, double reward) {
    entries.push_back({task, arm, reward});
  }
};

// Closed-form inversion of the Beta-Binomial moment equations
//   E[X] = t0 a / (a+b),  E[X^2] = t0 a (t0 (1+a) + b) / ((a+b)(1+a+b)).
// Returns nullopt when the moments are infeasible (at or below pure-binomial
// dispersion, or mean outside (0, t0)).
std::optional<std::pair<double, double>> invert_beta_binomial_moments(
    double m1, double m2, int t0);

// Method-of-moments prior estimate from batched exploration data. Each arm
// needs >= 2 exploration tasks with exactly t0 pulls each; arms whose
// empirical moments are infeasible fall back to Beta(1, 1).
BetaParams mom_estimate_beta(const ExplorationDataset& data, int t0, int K);

// OLS prior-mean estimate theta = V^-1 sum_s sum_i a_i y_{s,i} with
// V = m0 sum_i a_i a_i^T. Dataset arm fields index into `basis`; every
// exploration task must contain exactly one pull of each basis vector.
VectorXd ols_estimate_theta(const ExplorationDataset& data,
                            const std::vector<VectorXd>& basis, int m0);

// d arm indices whose features span R^d (identity for finite arms),
// selected by pivoted QR for conditioning.
std::vector<int> select_basis_arms(const ArmSet& arms);

struct BMetaSrmOptions {
  PolicyKind policy = PolicyKind::thompson();
  VectorXd psi_q;
  MatrixXd Sigma_q;
  RunOptions run_options;
};

// Optional per-task instrumentation; never influences decisions.
struct BMetaTrace {
  std::vector<double> gamma_first_round;  // width at each task's first round
  std::vector<VectorXd> theta_hat;        // meta-posterior mean after task s
};

// Bayesian meta-learner: per task, form the uncertainty-adjusted prior from
// the meta-posterior, play the task with the base policy, then fold the
// task's sufficient statistics back into the meta-posterior.
std::vector<RegretRow> b_meta_srm(const GaussianEnv& env,
                                  const BMetaSrmOptions& options,
                                  std::span<const TaskInstance> tasks, int n,
                                  const StreamFactory& streams,
                                  std::string_view agent_tag,
                                  BMetaTrace* trace = nullptr);

enum class FMode { Commit, Continual };

struct FMetaSrmOptions {
  ExploreStrategy strategy;
  FMode mode = FMode::Commit;
  RunOptions run_options;
  // Skip estimation and use the given prior parameter from task 1 on
  // (strategy None); used for oracle-reduction checks.
  std::optional<VectorXd> injected_theta;
  std::optional<BetaParams> injected_beta;
};

// Frequentist meta-learner, Gaussian case. Commit mode: exploration tasks
// spend d rounds on the basis and play the agnostic prior for the rest;
// afterwards TS runs with prior N(theta_hat, Sigma0). Continual mode
// re-estimates after every task's exploration rounds.
std::vector<RegretRow> f_meta_srm(const GaussianEnv& env,
                                  const FMetaSrmOptions& options,
                                  const GaussianBelief& agnostic_prior,
                                  std::span<const TaskInstance> tasks, int n,
                                  const StreamFactory& streams,
                                  std::string_view agent_tag);

// Frequentist meta-learner, Bernoulli case with Beta priors.
std::vector<RegretRow> f_meta_srm(int K, const FMetaSrmOptions& options,
                                  std::span<const TaskInstance> tasks, int n,
                                  const StreamFactory& streams,
                                  std::string_view agent_tag);

// TS with a fixed prior for every task: OracleTS with N(theta_star, Sigma0),
// agnostic TS with N(0, Sigma_q + Sigma0).
std::vector<RegretRow> run_fixed_prior_ts(const GaussianEnv& env,
                                          const GaussianBelief& prior,
                                          std::span<const TaskInstance> tasks,
                                          int n, const StreamFactory& streams,
                                          std::string_view agent_tag,
                                          const RunOptions& options = {});

std::vector<RegretRow> run_fixed_prior_ts(const BetaBelief& prior,
                                          std::span<const TaskInstance> tasks,
                                          int n, const StreamFactory& streams,
                                          std::string_view agent_tag);

// B-metaSRM with the meta-prior mean replaced by a uniform
// [-offset_range, offset_range] vector drawn from the agent's setup stream.
std::vector<RegretRow> mis_b_meta_srm(const GaussianEnv& env,
                                      const BMetaSrmOptions& options,
                                      double offset_range,
                                      std::span<const TaskInstance> tasks,
                                      int n, const StreamFactory& streams,
                                      std::string_view agent_tag,
                                      BMetaTrace* trace = nullptr);

}  // namespace metasrm
