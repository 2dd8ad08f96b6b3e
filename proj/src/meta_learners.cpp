#include "metasrm/meta_learners.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace metasrm {

namespace {

RegretRow make_row(int replication, int task_index, std::string_view agent,
                   const TaskInstance& task, const TaskRunResult& result) {
  RegretRow row;
  row.replication = replication;
  row.task = task_index;
  row.agent = std::string(agent);
  row.expected_simple_regret =
      expected_recommendation_regret(task, result.trajectory);
  row.realized_simple_regret =
      best_arm(task).second - task.mean(result.recommended_arm);
  row.cumulative_regret = cumulative_regret(task, result.trajectory);
  return row;
}

}  // namespace

ExploreStrategy ExploreStrategy::bernoulli_batched(int t0, int m0) {
  if (t0 < 2) {
    throw std::invalid_argument("ExploreStrategy: t0 must be >= 2");
  }
  if (m0 < 0) {
    throw std::invalid_argument("ExploreStrategy: m0 must be >= 0");
  }
  return {Tag::BernoulliBatched, t0, m0};
}

ExploreStrategy ExploreStrategy::linear_basis(int m0) {
  if (m0 < 0) {
    throw std::invalid_argument("ExploreStrategy: m0 must be >= 0");
  }
  return {Tag::LinearBasis, 2, m0};
}

std::optional<std::pair<double, double>> invert_beta_binomial_moments(
    double m1, double m2, int t0) {
  if (t0 < 2) {
    throw std::invalid_argument(
        "invert_beta_binomial_moments: t0 must be >= 2");
  }
  const double t = double(t0);
  if (!(m1 > 0.0) || !(m1 < t)) return std::nullopt;
  const double p = m1 / t;
  const double var = m2 - m1 * m1;
  const double binom_var = t * p * (1.0 - p);
  if (!(binom_var > 0.0)) return std::nullopt;
  // Var = t p (1-p) (c + t) / (c + 1) with c = alpha + beta, so the
  // dispersion ratio r must lie strictly inside (1, t).
  const double r = var / binom_var;
  if (!(r > 1.0) || !(r < t)) return std::nullopt;
  const double c = (t - r) / (r - 1.0);
  const double alpha = p * c;
  const double beta = (1.0 - p) * c;
  if (!(alpha > 0.0) || !(beta > 0.0)) return std::nullopt;
  return std::make_pair(alpha, beta);
}

BetaParams mom_estimate_beta(const ExplorationDataset& data, int t0, int K) {
  if (t0 < 2) throw std::invalid_argument("mom_estimate_beta: t0 must be >= 2");
  if (K < 1) throw std::invalid_argument("mom_estimate_beta: K must be >= 1");
  // arm -> task -> reward sum and pull count
  std::vector<std::map<int, std::pair<double, int>>> sums(K);
  for (const auto& e : data.entries) {
    if (e.arm < 0 || e.arm >= K) {
      throw std::invalid_argument("mom_estimate_beta: arm index out of range");
    }
    auto& cell = sums[e.arm][e.task];
    cell.first += e.reward;
    cell.second += 1;
  }
  BetaParams out(K, {1.0, 1.0});
  for (int a = 0; a < K; ++a) {
    if (sums[a].size() < 2) {
      throw std::invalid_argument(
          "mom_estimate_beta: arm " + std::to_string(a) +
          " has fewer than 2 exploration tasks");
    }
    double m1 = 0.0, m2 = 0.0;
    for (const auto& [task, cell] : sums[a]) {
      if (cell.second != t0) {
        throw std::invalid_argument(
            "mom_estimate_beta: arm " + std::to_string(a) + " in task " +
            std::to_string(task) + " has " + std::to_string(cell.second) +
            " pulls, expected t0 = " + std::to_string(t0));
      }
      m1 += cell.first;
      m2 += cell.first * cell.first;
    }
    const double count = double(sums[a].size());
    m1 /= count;
    m2 /= count;
    if (auto ab = invert_beta_binomial_moments(m1, m2, t0)) {
      out[a] = *ab;
    }
    // infeasible moments keep the Beta(1,1) fallback
  }
  return out;
}

VectorXd ols_estimate_theta(const ExplorationDataset& data,
                            const std::vector<VectorXd>& basis, int m0) {
  if (basis.empty()) {
    throw std::invalid_argument("ols_estimate_theta: empty basis");
  }
  const int d = int(basis[0].size());
  if (int(basis.size()) != d) {
    throw std::invalid_argument(
        "ols_estimate_theta: need exactly d basis vectors");
  }
  if (m0 < 1) {
    throw std::invalid_argument("ols_estimate_theta: m0 must be >= 1");
  }
  MatrixXd gram = MatrixXd::Zero(d, d);
  for (const auto& a : basis) {
    if (a.size() != d) {
      throw std::invalid_argument("ols_estimate_theta: basis dim mismatch");
    }
    gram += a * a.transpose();
  }
  Eigen::FullPivLU<MatrixXd> lu(gram);
  if (!lu.isInvertible()) {
    throw std::invalid_argument(
        "ols_estimate_theta: basis does not span R^d");
  }
  // Validate one pull of each basis index per task.
  std::map<int, std::vector<int>> pulls_per_task;
  for (const auto& e : data.entries) {
    if (e.arm < 0 || e.arm >= d) {
      throw std::invalid_argument(
          "ols_estimate_theta: basis index out of range");
    }
    auto& counts = pulls_per_task[e.task];
    counts.resize(d, 0);
    counts[e.arm] += 1;
  }
  if (int(pulls_per_task.size()) != m0) {
    throw std::invalid_argument(
        "ols_estimate_theta: dataset covers " +
        std::to_string(pulls_per_task.size()) + " tasks, expected m0 = " +
        std::to_string(m0));
  }
  for (const auto& [task, counts] : pulls_per_task) {
    for (int i = 0; i < d; ++i) {
      if (counts[i] != 1) {
        throw std::invalid_argument(
            "ols_estimate_theta: task " + std::to_string(task) +
            " must pull each basis arm exactly once");
      }
    }
  }
  VectorXd rhs = VectorXd::Zero(d);
  for (const auto& e : data.entries) rhs += basis[e.arm] * e.reward;
  const MatrixXd V = double(m0) * gram;
  return Eigen::LDLT<MatrixXd>(V).solve(rhs);
}

std::vector<int> select_basis_arms(const ArmSet& arms) {
  if (arms.kind() == ArmSet::Kind::FiniteIndexed) {
    std::vector<int> all(arms.count());
    for (int a = 0; a < arms.count(); ++a) all[a] = a;
    return all;
  }
  const MatrixXd At = arms.feature_matrix().transpose();  // d x K
  Eigen::ColPivHouseholderQR<MatrixXd> qr(At);
  const int d = int(At.rows());
  if (qr.rank() < d) {
    throw std::invalid_argument("select_basis_arms: arm set does not span R^d");
  }
  // indices()[j] is the pivoted position of original column j; the first d
  // pivot positions identify a well-conditioned spanning subset.
  std::vector<int> picked;
  const auto& idx = qr.colsPermutation().indices();
  for (int j = 0; j < int(idx.size()); ++j) {
    if (idx[j] < d) picked.push_back(j);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<RegretRow> b_meta_srm(const GaussianEnv& env,
                                  const BMetaSrmOptions& options,
                                  std::span<const TaskInstance> tasks, int n,
                                  const StreamFactory& streams,
                                  std::string_view agent_tag,
                                  BMetaTrace* trace) {
  MetaPosteriorState state(options.psi_q, options.Sigma_q);
  std::vector<RegretRow> rows;
  rows.reserve(tasks.size());
  for (std::size_t s = 0; s < tasks.size(); ++s) {
    const GaussianBelief prior = uncertainty_adjusted_prior(state, env.Sigma0);
    if (trace != nullptr) {
      const double delta =
          options.policy.tag == PolicyKind::Tag::BayesUcb ? options.policy.delta
                                                          : 0.1;
      trace->gamma_first_round.push_back(
          gamma_coefficient(prior, env.arms, env.sigma, delta));
    }
    Rng rng = streams.task_stream(s);
    const TaskRunResult result =
        run_task(options.policy, prior, env.arms, tasks[s], env.sigma, n, rng,
                 {}, options.run_options);
    rows.push_back(make_row(int(streams.replication()), int(s + 1), agent_tag,
                            tasks[s], result));
    state.update(summarize_task(result.trajectory, env.arms), env.Sigma0,
                 env.sigma);
    if (trace != nullptr) trace->theta_hat.push_back(state.theta_hat());
  }
  return rows;
}

namespace {

// Continual-mode task play: exploration rounds already happened and entered
// only the prior estimate, so the fresh belief starts after the prefix
// (estimate-then-instantiate ordering).
TaskRunResult play_task_fresh_after_prefix(const GaussianBelief& belief,
                                           const ArmSet& arms,
                                           const TaskInstance& task,
                                           double sigma, int n, Rng& rng,
                                           std::span<const int> prefix,
                                           std::span<const double> prefix_rewards) {
  Trajectory traj(arms.count());
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    traj.record(prefix[i], prefix_rewards[i]);
  }
  GaussianBelief b = belief;
  for (int t = int(prefix.size()); t < n; ++t) {
    const int arm = ts_select(b, arms, rng);
    const double y = sample_reward(task, arm, rng);
    traj.record(arm, y);
    b = within_task_update(b, arms.feature(arm), y, sigma);
  }
  const int rec = recommend_by_pull_frequency(traj, rng);
  return {std::move(traj), rec};
}

TaskRunResult play_task_fresh_after_prefix(const BetaBelief& belief,
                                           const TaskInstance& task, int n,
                                           Rng& rng,
                                           std::span<const int> prefix,
                                           std::span<const double> prefix_rewards) {
  Trajectory traj(task.num_arms());
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    traj.record(prefix[i], prefix_rewards[i]);
  }
  BetaBelief b = belief;
  for (int t = int(prefix.size()); t < n; ++t) {
    const int arm = ts_select(b, rng);
    const double y = sample_reward(task, arm, rng);
    traj.record(arm, y);
    b = beta_update(b, arm, y);
  }
  const int rec = recommend_by_pull_frequency(traj, rng);
  return {std::move(traj), rec};
}

// Like mom_estimate_beta but arms with fewer than two exploration tasks keep
// the Beta(1,1) fallback; used while continual exploration is still filling in.
BetaParams mom_estimate_beta_lenient(const ExplorationDataset& data, int t0,
                                     int K) {
  std::vector<std::map<int, double>> sums(K);
  for (const auto& e : data.entries) {
    sums[e.arm][e.task] += e.reward;
  }
  BetaParams out(K, {1.0, 1.0});
  for (int a = 0; a < K; ++a) {
    if (sums[a].size() < 2) continue;
    double m1 = 0.0, m2 = 0.0;
    for (const auto& [task, x] : sums[a]) {
      m1 += x;
      m2 += x * x;
    }
    const double count = double(sums[a].size());
    m1 /= count;
    m2 /= count;
    if (auto ab = invert_beta_binomial_moments(m1, m2, t0)) out[a] = *ab;
  }
  return out;
}

}  // namespace

std::vector<RegretRow> f_meta_srm(const GaussianEnv& env,
                                  const FMetaSrmOptions& options,
                                  const GaussianBelief& agnostic_prior,
                                  std::span<const TaskInstance> tasks, int n,
                                  const StreamFactory& streams,
                                  std::string_view agent_tag) {
  const bool injected = options.injected_theta.has_value();
  if (options.strategy.tag == ExploreStrategy::Tag::BernoulliBatched) {
    throw std::invalid_argument(
        "f_meta_srm: bernoulli-batched strategy needs a Bernoulli environment");
  }
  if (!injected && options.strategy.tag != ExploreStrategy::Tag::LinearBasis) {
    throw std::invalid_argument(
        "f_meta_srm: Gaussian case needs the linear-basis strategy or an "
        "injected estimate");
  }
  std::vector<int> basis_arms;
  std::vector<VectorXd> basis;
  if (!injected) {
    basis_arms = select_basis_arms(env.arms);
    if (int(basis_arms.size()) > n) {
      throw std::invalid_argument(
          "f_meta_srm: horizon n must be >= d to pull the basis each "
          "exploration task");
    }
    for (int a : basis_arms) basis.push_back(env.arms.feature(a));
  }
  const int m0 = injected ? 0 : options.strategy.m0;
  if (!injected && options.mode == FMode::Commit && m0 < 1) {
    throw std::invalid_argument(
        "f_meta_srm: commit mode needs m0 >= 1 or an injected estimate");
  }

  ExplorationDataset dataset;
  std::optional<VectorXd> theta_hat = options.injected_theta;
  std::vector<RegretRow> rows;
  rows.reserve(tasks.size());

  for (std::size_t s = 0; s < tasks.size(); ++s) {
    Rng rng = streams.task_stream(s);
    TaskRunResult result{Trajectory(env.arms.count()), 0};
    if (options.mode == FMode::Commit) {
      if (int(s) < m0) {
        // Exploration task: basis pulls, then the agnostic policy.
        result = run_task(PolicyKind::thompson(), agnostic_prior, env.arms,
                          tasks[s], env.sigma, n, rng, basis_arms,
                          options.run_options);
        for (std::size_t i = 0; i < basis_arms.size(); ++i) {
          dataset.append(int(s), int(i), result.trajectory.steps()[i].second);
        }
        if (int(s) + 1 == m0 || s + 1 == tasks.size()) {
          theta_hat = ols_estimate_theta(dataset, basis, int(s) + 1);
        }
      } else {
        if (!theta_hat.has_value()) {
          throw std::invalid_argument(
              "f_meta_srm: no estimate available (m0 = 0 without injection)");
        }
        const GaussianBelief prior(*theta_hat, env.Sigma0);
        result = run_task(PolicyKind::thompson(), prior, env.arms, tasks[s],
                          env.sigma, n, rng, {}, options.run_options);
      }
    } else {  // Continual
      if (injected) {
        const GaussianBelief prior(*options.injected_theta, env.Sigma0);
        result = run_task(PolicyKind::thompson(), prior, env.arms, tasks[s],
                          env.sigma, n, rng, {}, options.run_options);
      } else {
        std::vector<double> prefix_rewards(basis_arms.size());
        for (std::size_t i = 0; i < basis_arms.size(); ++i) {
          prefix_rewards[i] = sample_reward(tasks[s], basis_arms[i], rng);
          dataset.append(int(s), int(i), prefix_rewards[i]);
        }
        theta_hat = ols_estimate_theta(dataset, basis, int(s) + 1);
        const GaussianBelief prior(*theta_hat, env.Sigma0);
        result = play_task_fresh_after_prefix(prior, env.arms, tasks[s],
                                              env.sigma, n, rng, basis_arms,
                                              prefix_rewards);
      }
    }
    rows.push_back(make_row(int(streams.replication()), int(s + 1), agent_tag,
                            tasks[s], result));
  }
  return rows;
}

std::vector<RegretRow> f_meta_srm(int K, const FMetaSrmOptions& options,
                                  std::span<const TaskInstance> tasks, int n,
                                  const StreamFactory& streams,
                                  std::string_view agent_tag) {
  const bool injected = options.injected_beta.has_value();
  if (!injected &&
      options.strategy.tag != ExploreStrategy::Tag::BernoulliBatched) {
    throw std::invalid_argument(
        "f_meta_srm: Bernoulli case needs the bernoulli-batched strategy or "
        "an injected estimate");
  }
  if (injected && int(options.injected_beta->size()) != K) {
    throw std::invalid_argument("f_meta_srm: injected estimate has wrong K");
  }
  const int t0 = options.strategy.t0;
  if (!injected && t0 > n) {
    throw std::invalid_argument("f_meta_srm: t0 must be <= n");
  }
  if (!injected && options.mode == FMode::Commit && options.strategy.m0 < 1) {
    throw std::invalid_argument(
        "f_meta_srm: commit mode needs m0 >= 1 or an injected estimate");
  }
  // Round the exploration budget up to a full batch per arm.
  const int m0 = injected ? 0 : ((options.strategy.m0 + K - 1) / K) * K;
  const int batch = std::max(1, m0 / std::max(1, K));

  const BetaBelief agnostic = BetaBelief::uniform(K);
  ExplorationDataset dataset;
  std::optional<BetaParams> estimate = options.injected_beta;
  std::vector<RegretRow> rows;
  rows.reserve(tasks.size());

  // Arm explored in task s (commit: one batch of tasks per arm; continual:
  // cyclic schedule).
  const auto explored_arm = [&](int s) {
    if (options.mode == FMode::Commit) return std::min(s / batch, K - 1);
    return s % K;
  };

  for (std::size_t s = 0; s < tasks.size(); ++s) {
    Rng rng = streams.task_stream(s);
    TaskRunResult result{Trajectory(K), 0};
    if (!injected && options.mode == FMode::Commit && int(s) < m0) {
      // Exploration task: t0 pulls of the batch arm, then the agnostic policy.
      const int arm = explored_arm(int(s));
      const std::vector<int> prefix(t0, arm);
      result = run_task(agnostic, tasks[s], n, rng, prefix);
      for (int i = 0; i < t0; ++i) {
        dataset.append(int(s), arm, result.trajectory.steps()[i].second);
      }
      if (int(s) + 1 == m0 || s + 1 == tasks.size()) {
        estimate = mom_estimate_beta_lenient(dataset, t0, K);
      }
    } else if (!injected && options.mode == FMode::Continual) {
      const int arm = explored_arm(int(s));
      const std::vector<int> prefix(t0, arm);
      std::vector<double> prefix_rewards(t0);
      for (int i = 0; i < t0; ++i) {
        prefix_rewards[i] = sample_reward(tasks[s], arm, rng);
        dataset.append(int(s), arm, prefix_rewards[i]);
      }
      estimate = mom_estimate_beta_lenient(dataset, t0, K);
      result = play_task_fresh_after_prefix(BetaBelief(*estimate), tasks[s], n,
                                            rng, prefix, prefix_rewards);
    } else {
      if (!estimate.has_value()) {
        throw std::invalid_argument(
            "f_meta_srm: no estimate available (m0 = 0 without injection)");
      }
      const BetaBelief prior(*estimate);
      result = run_task(prior, tasks[s], n, rng);
    }
    rows.push_back(make_row(int(streams.replication()), int(s + 1), agent_tag,
                            tasks[s], result));
  }
  return rows;
}

std::vector<RegretRow> run_fixed_prior_ts(const GaussianEnv& env,
                                          const GaussianBelief& prior,
                                          std::span<const TaskInstance> tasks,
                                          int n, const StreamFactory& streams,
                                          std::string_view agent_tag,
                                          const RunOptions& options) {
  std::vector<RegretRow> rows;
  rows.reserve(tasks.size());
  for (std::size_t s = 0; s < tasks.size(); ++s) {
    Rng rng = streams.task_stream(s);
    const TaskRunResult result = run_task(
        PolicyKind::thompson(), prior, env.arms, tasks[s], env.sigma, n, rng,
        {}, options);
    rows.push_back(make_row(int(streams.replication()), int(s + 1), agent_tag,
                            tasks[s], result));
  }
  return rows;
}

std::vector<RegretRow> run_fixed_prior_ts(const BetaBelief& prior,
                                          std::span<const TaskInstance> tasks,
                                          int n, const StreamFactory& streams,
                                          std::string_view agent_tag) {
  std::vector<RegretRow> rows;
  rows.reserve(tasks.size());
  for (std::size_t s = 0; s < tasks.size(); ++s) {
    Rng rng = streams.task_stream(s);
    const TaskRunResult result = run_task(prior, tasks[s], n, rng);
    rows.push_back(make_row(int(streams.replication()), int(s + 1), agent_tag,
                            tasks[s], result));
  }
  return rows;
}

std::vector<RegretRow> mis_b_meta_srm(const GaussianEnv& env,
                                      const BMetaSrmOptions& options,
                                      double offset_range,
                                      std::span<const TaskInstance> tasks,
                                      int n, const StreamFactory& streams,
                                      std::string_view agent_tag,
                                      BMetaTrace* trace) {
  if (!(offset_range >= 0.0)) {
    throw std::invalid_argument("mis_b_meta_srm: offset_range must be >= 0");
  }
  Rng setup = streams.setup_stream();
  BMetaSrmOptions mis = options;
  for (Eigen::Index i = 0; i < mis.psi_q.size(); ++i) {
    mis.psi_q[i] = setup.uniform(-offset_range, offset_range);
  }
  return b_meta_srm(env, mis, tasks, n, streams, agent_tag, trace);
}

}  // namespace metasrm
