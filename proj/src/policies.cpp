#include "metasrm/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace metasrm {

namespace {

int argmax_lowest(const VectorXd& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

VectorXd per_arm_quad_forms(const GaussianBelief& belief, const ArmSet& arms) {
  VectorXd q(arms.count());
  for (int a = 0; a < arms.count(); ++a) {
    q[a] = arms.quad_form(belief.covariance, a);
  }
  return q;
}

double gamma_from_s2max(double s2max, double sigma, double delta, int K) {
  return 4.0 * std::sqrt(s2max / std::log1p(s2max / (sigma * sigma)) *
                         std::log(4.0 * double(K) / delta));
}

}  // namespace

PolicyKind PolicyKind::bayes_ucb(double delta) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("PolicyKind: delta must be in (0, 1]");
  }
  return {Tag::BayesUcb, delta};
}

int ts_select(const GaussianBelief& state, const ArmSet& arms, Rng& rng) {
  if (state.dim() != arms.dim()) {
    throw std::invalid_argument("ts_select: dimension mismatch");
  }
  const VectorXd sample =
      linalg::mvn_sample(state.mean, state.covariance, rng);
  return argmax_lowest(arms.induced_means(sample));
}

int ts_select(const BetaBelief& state, Rng& rng) {
  VectorXd draws(state.num_arms());
  for (int a = 0; a < state.num_arms(); ++a) {
    draws[a] = rng.beta(state.per_arm[a].first, state.per_arm[a].second);
  }
  return argmax_lowest(draws);
}

double mutual_information_gain(const GaussianBelief& belief,
                               const VectorXd& arm_feature, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument(
        "mutual_information_gain: sigma must be > 0");
  }
  const double q = arm_feature.dot(belief.covariance * arm_feature);
  return 0.5 * std::log1p(std::max(0.0, q) / (sigma * sigma));
}

double gamma_coefficient(const GaussianBelief& belief, const ArmSet& arms,
                         double sigma, double delta) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("gamma_coefficient: delta must be in (0, 1]");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gamma_coefficient: sigma must be > 0");
  }
  const double s2max = per_arm_quad_forms(belief, arms).maxCoeff();
  if (!(s2max > 0.0)) {
    throw std::domain_error(
        "gamma_coefficient: covariance is zero along every arm");
  }
  return gamma_from_s2max(s2max, sigma, delta, arms.count());
}

int bayes_ucb_select(const GaussianBelief& state, const ArmSet& arms,
                     double sigma, double delta, const RunOptions& options,
                     Rng* rng) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("bayes_ucb_select: delta must be in (0, 1]");
  }
  const VectorXd q = per_arm_quad_forms(state, arms);
  const double s2max = q.maxCoeff();
  VectorXd centers;
  if (options.ucb_sampled_mean) {
    if (rng == nullptr) {
      throw std::invalid_argument(
          "bayes_ucb_select: sampled-mean variant needs an rng");
    }
    centers = arms.induced_means(
        linalg::mvn_sample(state.mean, state.covariance, *rng));
  } else {
    centers = arms.induced_means(state.mean);
  }
  if (!(s2max > 0.0)) return argmax_lowest(centers);  // pure exploitation
  const double gamma = gamma_from_s2max(s2max, sigma, delta, arms.count());
  const double s2 = sigma * sigma;
  VectorXd index(arms.count());
  for (int a = 0; a < arms.count(); ++a) {
    const double gain = 0.5 * std::log1p(std::max(0.0, q[a]) / s2);
    index[a] = centers[a] + gamma * std::sqrt(gain);
  }
  return argmax_lowest(index);
}

namespace {

// Scalar mirror of the dense operations for finite arms with exactly
// diagonal covariance. Consumes the random stream identically.
struct DiagGaussianState {
  VectorXd mean;
  VectorXd var;

  int ts_select(Rng& rng) const {
    int best = 0;
    double best_v = 0.0;
    for (int a = 0; a < mean.size(); ++a) {
      const double v =
          mean[a] + std::sqrt(std::max(0.0, var[a])) * rng.normal();
      if (a == 0 || v > best_v) {
        best = a;
        best_v = v;
      }
    }
    return best;
  }

  int ucb_select(double sigma, double delta, const RunOptions& options,
                 Rng& rng) const {
    const double s2max = var.maxCoeff();
    VectorXd centers(mean.size());
    if (options.ucb_sampled_mean) {
      for (int a = 0; a < mean.size(); ++a) {
        centers[a] =
            mean[a] + std::sqrt(std::max(0.0, var[a])) * rng.normal();
      }
    } else {
      centers = mean;
    }
    if (!(s2max > 0.0)) return argmax_lowest(centers);
    const double gamma =
        gamma_from_s2max(s2max, sigma, delta, int(mean.size()));
    const double s2 = sigma * sigma;
    int best = 0;
    double best_v = 0.0;
    for (int a = 0; a < mean.size(); ++a) {
      const double v = centers[a] + gamma * std::sqrt(0.5 * std::log1p(
                                                std::max(0.0, var[a]) / s2));
      if (a == 0 || v > best_v) {
        best = a;
        best_v = v;
      }
    }
    return best;
  }

  void update(int arm, double reward, double sigma) {
    // Same expression trees as within_task_update restricted to (arm, arm),
    // so the fast and dense paths stay bit-identical.
    const double denom = sigma * sigma + var[arm];
    mean[arm] += var[arm] * ((reward - mean[arm]) / denom);
    var[arm] -= var[arm] * var[arm] / denom;
  }
};

}  // namespace

TaskRunResult run_task(const PolicyKind& policy, const GaussianBelief& start,
                       const ArmSet& arms, const TaskInstance& task,
                       double sigma, int n, Rng& rng,
                       std::span<const int> forced_prefix,
                       const RunOptions& options) {
  if (n < 1) throw std::invalid_argument("run_task: n must be >= 1");
  if (int(forced_prefix.size()) > n) {
    throw std::invalid_argument("run_task: forced prefix longer than horizon");
  }
  if (task.num_arms() != arms.count()) {
    throw std::invalid_argument("run_task: task/arm count mismatch");
  }
  Trajectory traj(arms.count());

  const bool diag = options.diagonal_fast_path &&
                    arms.kind() == ArmSet::Kind::FiniteIndexed &&
                    linalg::is_exactly_diagonal(start.covariance);
  if (diag) {
    DiagGaussianState state{start.mean, start.covariance.diagonal()};
    for (int t = 0; t < n; ++t) {
      int arm;
      if (t < int(forced_prefix.size())) {
        arm = forced_prefix[t];
      } else if (policy.tag == PolicyKind::Tag::Thompson) {
        arm = state.ts_select(rng);
      } else {
        arm = state.ucb_select(sigma, policy.delta, options, rng);
      }
      const double y = sample_reward(task, arm, rng);
      traj.record(arm, y);
      state.update(arm, y, sigma);
    }
  } else {
    GaussianBelief belief = start;
    for (int t = 0; t < n; ++t) {
      int arm;
      if (t < int(forced_prefix.size())) {
        arm = forced_prefix[t];
      } else if (policy.tag == PolicyKind::Tag::Thompson) {
        arm = ts_select(belief, arms, rng);
      } else {
        arm = bayes_ucb_select(belief, arms, sigma, policy.delta, options,
                               &rng);
      }
      const double y = sample_reward(task, arm, rng);
      traj.record(arm, y);
      belief = within_task_update(belief, arms.feature(arm), y, sigma);
    }
  }
  const int rec = recommend_by_pull_frequency(traj, rng);
  return {std::move(traj), rec};
}

TaskRunResult run_task(const BetaBelief& start, const TaskInstance& task,
                       int n, Rng& rng, std::span<const int> forced_prefix) {
  if (n < 1) throw std::invalid_argument("run_task: n must be >= 1");
  if (int(forced_prefix.size()) > n) {
    throw std::invalid_argument("run_task: forced prefix longer than horizon");
  }
  if (task.num_arms() != start.num_arms()) {
    throw std::invalid_argument("run_task: task/belief arm count mismatch");
  }
  if (task.noise().kind != NoiseModel::Kind::Bernoulli) {
    throw std::invalid_argument("run_task: Beta beliefs need Bernoulli rewards");
  }
  Trajectory traj(task.num_arms());
  BetaBelief belief = start;
  for (int t = 0; t < n; ++t) {
    const int arm = t < int(forced_prefix.size()) ? forced_prefix[t]
                                                  : ts_select(belief, rng);
    const double y = sample_reward(task, arm, rng);
    traj.record(arm, y);
    belief = beta_update(belief, arm, y);
  }
  const int rec = recommend_by_pull_frequency(traj, rng);
  return {std::move(traj), rec};
}

}  // namespace metasrm
