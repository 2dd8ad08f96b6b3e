#include "metasrm/bandit_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace metasrm {

ArmSet ArmSet::finite(int K) {
  if (K < 1) throw std::invalid_argument("ArmSet: K must be >= 1");
  return ArmSet(Kind::FiniteIndexed, K, MatrixXd());
}

ArmSet ArmSet::features(MatrixXd feats) {
  if (feats.rows() < 1 || feats.cols() < 1) {
    throw std::invalid_argument("ArmSet: need K >= 1 arms of dimension >= 1");
  }
  for (Eigen::Index a = 0; a < feats.rows(); ++a) {
    if (feats.row(a).norm() > 1.0 + 1e-9) {
      throw std::invalid_argument(
          "ArmSet: feature vectors must have Euclidean norm <= 1");
    }
  }
  const int K = int(feats.rows());
  return ArmSet(Kind::FeatureVectors, K, std::move(feats));
}

VectorXd ArmSet::feature(int arm) const {
  if (arm < 0 || arm >= K_) throw std::out_of_range("ArmSet: arm index");
  if (kind_ == Kind::FiniteIndexed) {
    VectorXd e = VectorXd::Zero(K_);
    e[arm] = 1.0;
    return e;
  }
  return features_.row(arm).transpose();
}

VectorXd ArmSet::induced_means(const VectorXd& param) const {
  if (kind_ == Kind::FiniteIndexed) {
    if (param.size() != K_) {
      throw std::invalid_argument("ArmSet: parameter length must equal K");
    }
    return param;
  }
  if (param.size() != features_.cols()) {
    throw std::invalid_argument("ArmSet: parameter length must equal d");
  }
  return features_ * param;
}

double ArmSet::quad_form(const MatrixXd& cov, int arm) const {
  if (kind_ == Kind::FiniteIndexed) return cov(arm, arm);
  const auto a = features_.row(arm);
  return a * cov * a.transpose();
}

NoiseModel NoiseModel::gaussian(double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("NoiseModel: gaussian sigma must be > 0");
  }
  return NoiseModel{Kind::Gaussian, sigma};
}

NoiseModel NoiseModel::bernoulli() {
  return NoiseModel{Kind::Bernoulli, 0.0};
}

TaskInstance::TaskInstance(VectorXd means, NoiseModel noise)
    : means_(std::move(means)), noise_(noise) {
  if (means_.size() < 1) {
    throw std::invalid_argument("TaskInstance: need at least one arm");
  }
  if (noise_.kind == NoiseModel::Kind::Bernoulli) {
    for (Eigen::Index a = 0; a < means_.size(); ++a) {
      if (means_[a] < 0.0 || means_[a] > 1.0) {
        throw std::invalid_argument(
            "TaskInstance: bernoulli means must lie in [0,1]");
      }
    }
  }
}

TaskInstance::TaskInstance(const ArmSet& arms, VectorXd param, NoiseModel noise)
    : TaskInstance(arms.induced_means(param), noise) {
  param_ = std::move(param);
}

Trajectory::Trajectory(int num_arms) : pull_counts_(num_arms, 0) {
  if (num_arms < 1) throw std::invalid_argument("Trajectory: num_arms >= 1");
}

void Trajectory::record(int arm, double reward) {
  if (arm < 0 || arm >= num_arms()) {
    throw std::out_of_range("Trajectory: arm index");
  }
  steps_.emplace_back(arm, reward);
  ++pull_counts_[arm];
}

std::pair<int, double> best_arm(const TaskInstance& task) {
  int best = 0;
  double best_mean = task.mean(0);
  for (int a = 1; a < task.num_arms(); ++a) {
    if (task.mean(a) > best_mean) {
      best = a;
      best_mean = task.mean(a);
    }
  }
  return {best, best_mean};
}

int recommend_by_pull_frequency(const Trajectory& trajectory, Rng& rng) {
  const int n = trajectory.length();
  if (n < 1) {
    throw std::invalid_argument(
        "recommend_by_pull_frequency: trajectory is empty");
  }
  // Inverse-CDF draw over N_a / n using integer counts.
  const double u = rng.uniform() * double(n);
  double acc = 0.0;
  int last_nonzero = 0;
  for (int a = 0; a < trajectory.num_arms(); ++a) {
    const int c = trajectory.pull_count(a);
    if (c > 0) last_nonzero = a;
    acc += double(c);
    if (u < acc) return a;
  }
  return last_nonzero;  // u == n exactly; cannot happen with uniform() < 1
}

double cumulative_regret(const TaskInstance& task,
                         const Trajectory& trajectory) {
  if (trajectory.length() < 1) {
    throw std::invalid_argument("cumulative_regret: trajectory is empty");
  }
  const double mu_star = best_arm(task).second;
  double played = 0.0;
  for (const auto& [arm, reward] : trajectory.steps()) {
    (void)reward;
    played += task.mean(arm);
  }
  return double(trajectory.length()) * mu_star - played;
}

double expected_recommendation_regret(const TaskInstance& task,
                                      const Trajectory& trajectory) {
  const int n = trajectory.length();
  if (n < 1) {
    throw std::invalid_argument(
        "expected_recommendation_regret: trajectory is empty");
  }
  const double mu_star = best_arm(task).second;
  double rec_mean = 0.0;
  for (int a = 0; a < trajectory.num_arms(); ++a) {
    rec_mean += (double(trajectory.pull_count(a)) / double(n)) * task.mean(a);
  }
  return mu_star - rec_mean;
}

std::vector<RegretCurve> aggregate_regret(const RegretLedger& ledger,
                                          AggregateMode /*mode*/) {
  if (ledger.empty()) {
    throw std::invalid_argument("aggregate_regret: ledger is empty");
  }
  // agent -> task -> values across replications
  std::map<std::string, std::map<int, std::vector<double>>> groups;
  for (const auto& row : ledger.rows()) {
    groups[row.agent][row.task].push_back(row.expected_simple_regret);
  }
  std::vector<RegretCurve> curves;
  for (const auto& [agent, by_task] : groups) {
    const std::size_t reps = by_task.begin()->second.size();
    RegretCurve curve;
    curve.agent = agent;
    double running = 0.0;
    int count = 0;
    for (const auto& [task, values] : by_task) {
      if (values.size() != reps) {
        throw std::invalid_argument(
            "aggregate_regret: replications cover inconsistent task ranges "
            "for agent '" + agent + "'");
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= double(values.size());
      double se = 0.0;
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / double(values.size() - 1)) /
             std::sqrt(double(values.size()));
      }
      running += mean;
      ++count;
      curve.points.push_back({task, mean, se, running / double(count)});
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace metasrm
