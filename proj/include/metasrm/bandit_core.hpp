#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metasrm/linalg.hpp"
#include "metasrm/rng.hpp"

namespace metasrm {

// Set of actions. Finite-indexed arms act directly on a K-vector of means;
// feature arms are rows of a K x d matrix with Euclidean norm <= 1.
class ArmSet {
 public:
  enum class Kind { FiniteIndexed, FeatureVectors };

  static ArmSet finite(int K);
  static ArmSet features(MatrixXd feats);  // one arm per row

  Kind kind() const { return kind_; }
  int count() const { return K_; }
  // Parameter dimension: d for feature arms, K for finite-indexed arms.
  int dim() const { return kind_ == Kind::FiniteIndexed ? K_ : int(features_.cols()); }
  const MatrixXd& feature_matrix() const { return features_; }
  VectorXd feature(int arm) const;

  // Per-arm means induced by a parameter vector (identity for finite arms).
  VectorXd induced_means(const VectorXd& param) const;
  // a^T cov a for one arm.
  double quad_form(const MatrixXd& cov, int arm) const;

 private:
  ArmSet(Kind kind, int K, MatrixXd feats)
      : kind_(kind), K_(K), features_(std::move(feats)) {}

  Kind kind_;
  int K_;
  MatrixXd features_;
};

struct NoiseModel {
  enum class Kind { Gaussian, Bernoulli };
  Kind kind = Kind::Gaussian;
  double sigma = 1.0;  // Gaussian only

  static NoiseModel gaussian(double sigma);
  static NoiseModel bernoulli();
};

// One sampled bandit problem. For feature arms the d-dimensional parameter is
// kept alongside the induced per-arm means, computed once at construction.
class TaskInstance {
 public:
  TaskInstance(VectorXd means, NoiseModel noise);
  TaskInstance(const ArmSet& arms, VectorXd param, NoiseModel noise);

  int num_arms() const { return int(means_.size()); }
  double mean(int arm) const { return means_[arm]; }
  const VectorXd& means() const { return means_; }
  const std::optional<VectorXd>& param() const { return param_; }
  const NoiseModel& noise() const { return noise_; }

 private:
  VectorXd means_;
  std::optional<VectorXd> param_;  // feature-arm tasks only
  NoiseModel noise_;
};

// Ordered (arm, reward) record of one task plus exact pull counts.
class Trajectory {
 public:
  explicit Trajectory(int num_arms);

  void record(int arm, double reward);
  int length() const { return int(steps_.size()); }
  int num_arms() const { return int(pull_counts_.size()); }
  const std::vector<std::pair<int, double>>& steps() const { return steps_; }
  int pull_count(int arm) const { return pull_counts_[arm]; }
  const std::vector<int>& pull_counts() const { return pull_counts_; }

 private:
  std::vector<std::pair<int, double>> steps_;
  std::vector<int> pull_counts_;
};

struct RegretRow {
  int replication = 0;
  int task = 0;
  std::string agent;
  double expected_simple_regret = 0.0;  // conditional on pull frequencies
  double realized_simple_regret = 0.0;  // for the sampled recommendation
  double cumulative_regret = 0.0;
};

class RegretLedger {
 public:
  void append(RegretRow row) { rows_.push_back(std::move(row)); }
  const std::vector<RegretRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

 private:
  std::vector<RegretRow> rows_;
};

// Lowest-index maximizer of the task means and its mean value.
std::pair<int, double> best_arm(const TaskInstance& task);

// Draws arm a with probability N_a / n from a completed trajectory.
int recommend_by_pull_frequency(const Trajectory& trajectory, Rng& rng);

// n * mu(A*) - sum_t mu(A_t), always >= 0.
double cumulative_regret(const TaskInstance& task, const Trajectory& trajectory);

// mu(A*) - sum_a (N_a / n) mu(a): the expectation of the realized simple
// regret over the recommendation draw; equals cumulative_regret / n.
double expected_recommendation_regret(const TaskInstance& task,
                                      const Trajectory& trajectory);

enum class AggregateMode { Frequentist, BayesMonteCarlo };

struct RegretCurvePoint {
  int task = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double cum_mean = 0.0;  // running average of mean over tasks
};

struct RegretCurve {
  std::string agent;
  std::vector<RegretCurvePoint> points;
};

// Per-task mean of the expected simple regret across replications, with
// standard error sample_std / sqrt(R). Both modes average the same rows; the
// mode names the estimand (fixed prior vs Monte-Carlo over prior draws).
// Throws if replications cover inconsistent task ranges for an agent.
std::vector<RegretCurve> aggregate_regret(const RegretLedger& ledger,
                                          AggregateMode mode);

}  // namespace metasrm
