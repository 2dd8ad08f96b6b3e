#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "metasrm/diagnostics.hpp"
#include "metasrm/posteriors.hpp"

using namespace metasrm;

namespace {

// Independent oracle for the meta-posterior: marginalize each task's mean
// analytically at the observation level, y_l | theta ~ N(A_l theta,
// A_l Sigma0 A_l^T + sigma^2 I), and accumulate the Gaussian posterior of
// theta with dense n x n solves. Never touches the V/B Woodbury route.
std::pair<VectorXd, MatrixXd> joint_model_meta_posterior(
    const VectorXd& psi_q, const MatrixXd& Sigma_q, const MatrixXd& Sigma0,
    double sigma,
    const std::vector<std::pair<MatrixXd, VectorXd>>& task_data) {
  MatrixXd lambda = Sigma_q.inverse();
  VectorXd h = lambda * psi_q;
  for (const auto& [A, y] : task_data) {
    if (A.rows() == 0) continue;
    const MatrixXd C = A * Sigma0 * A.transpose() +
                       sigma * sigma * MatrixXd::Identity(A.rows(), A.rows());
    const Eigen::LDLT<MatrixXd> ldlt(C);
    lambda += A.transpose() * ldlt.solve(A);
    h += A.transpose() * ldlt.solve(y);
  }
  const MatrixXd cov = lambda.inverse();
  return {cov * h, cov};
}

GaussianBelief make_belief(const VectorXd& m, const MatrixXd& c) {
  return GaussianBelief(m, c);
}

MatrixXd random_psd(Rng& rng, int d, double scale) {
  MatrixXd A(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
  }
  return scale * (A * A.transpose()) / double(d) +
         1e-3 * MatrixXd::Identity(d, d);
}

}  // namespace

TEST_CASE("within_task_update scalar worked example") {
  const GaussianBelief prior = make_belief(VectorXd::Zero(1),
                                           MatrixXd::Identity(1, 1));
  const VectorXd a = VectorXd::Ones(1);
  const GaussianBelief post = within_task_update(prior, a, 2.0, 1.0);
  CHECK(post.mean[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(post.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("within_task_update zero feature adds no information") {
  VectorXd m(2);
  m << 0.4, -0.1;
  MatrixXd c(2, 2);
  c << 0.5, 0.1, 0.1, 0.3;
  const GaussianBelief prior = make_belief(m, c);
  const GaussianBelief post =
      within_task_update(prior, VectorXd::Zero(2), 3.7, 1.0);
  CHECK((post.mean - prior.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((post.covariance - prior.covariance).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("update chains match the batch oracle and are order invariant") {
  Rng rng({31});
  for (int chain = 0; chain < 120; ++chain) {
    const int d = 1 + int(rng.uniform_index(5));
    const int n = 1 + int(rng.uniform_index(50));
    const double sigma = 0.5 + rng.uniform();
    VectorXd m0(d);
    for (int i = 0; i < d; ++i) m0[i] = rng.normal();
    const MatrixXd S0 = random_psd(rng, d, 1.0);
    const GaussianBelief prior = make_belief(m0, S0);

    std::vector<std::pair<VectorXd, double>> obs;
    for (int t = 0; t < n; ++t) {
      VectorXd a(d);
      for (int i = 0; i < d; ++i) a[i] = rng.normal();
      obs.emplace_back(a, rng.normal());
    }

    GaussianBelief chained = prior;
    for (const auto& [a, y] : obs) {
      chained = within_task_update(chained, a, y, sigma);
    }
    const GaussianBelief batch =
        brute_force_gaussian_posterior(prior, obs, sigma);
    CHECK((chained.mean - batch.mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((chained.covariance - batch.covariance).cwiseAbs().maxCoeff() < 1e-8);

    // permutation invariance
    std::vector<std::size_t> order(obs.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    GaussianBelief permuted = prior;
    for (std::size_t idx : order) {
      permuted = within_task_update(permuted, obs[idx].first, obs[idx].second,
                                    sigma);
    }
    CHECK((chained.mean - permuted.mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((chained.covariance - permuted.covariance).cwiseAbs().maxCoeff() <
          1e-8);
  }
}

TEST_CASE("meta posterior initialization encodes the meta-prior") {
  VectorXd psi(2);
  psi << 0.5, -1.0;
  const MatrixXd Sq = 4.0 * MatrixXd::Identity(2, 2);
  const MetaPosteriorState state(psi, Sq);
  CHECK((state.theta_hat() - psi).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((state.covariance() - Sq).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(state.tasks_seen() == 0);
}

TEST_CASE("meta posterior ignores empty tasks") {
  VectorXd psi(2);
  psi << 0.5, -1.0;
  MetaPosteriorState state(psi, MatrixXd::Identity(2, 2));
  const TaskSummary empty{MatrixXd::Zero(2, 2), VectorXd::Zero(2)};
  state.update(empty, 0.01 * MatrixXd::Identity(2, 2), 1.0);
  CHECK((state.theta_hat() - psi).cwiseAbs().maxCoeff() == 0.0);
  CHECK((state.precision() - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("meta posterior scalar worked example") {
  const int n = 8;
  const double s0sq = 0.04, ybar = 0.3;
  MetaPosteriorState state(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  TaskSummary summary{MatrixXd::Constant(1, 1, double(n)),
                      VectorXd::Constant(1, n * ybar)};
  state.update(summary, MatrixXd::Constant(1, 1, s0sq), 1.0);
  const double expected_precision = 1.0 + n / (1.0 + n * s0sq);
  CHECK(state.precision()(0, 0) ==
        doctest::Approx(expected_precision).epsilon(1e-12));

  // cross-check mean and variance against dense-grid numeric integration of
  // prior(theta) * integral_mu N(mu; theta, s0sq) prod_t N(y_t; mu, 1) dmu
  const int G = 1201;
  const double lo = -4.0, hi = 4.0;
  const double dth = (hi - lo) / (G - 1);
  std::vector<double> post(G);
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < G; ++i) {
    const double theta = lo + dth * i;
    // inner integral over mu on its own grid
    double inner = 0.0;
    const int H = 1201;
    const double mlo = theta - 3.0, mhi = theta + 3.0;
    const double dmu = (mhi - mlo) / (H - 1);
    for (int j = 0; j < H; ++j) {
      const double mu = mlo + dmu * j;
      double logp = -0.5 * (mu - theta) * (mu - theta) / s0sq -
                    0.5 * std::log(s0sq);
      // n observations with mean ybar: sum (y_t - mu)^2 = n (ybar - mu)^2 + C
      logp += -0.5 * n * (ybar - mu) * (ybar - mu);
      const double w = (j == 0 || j == H - 1) ? 0.5 : 1.0;
      inner += w * std::exp(logp);
    }
    inner *= dmu;
    const double prior = std::exp(-0.5 * theta * theta);
    const double w = (i == 0 || i == G - 1) ? 0.5 : 1.0;
    post[std::size_t(i)] = prior * inner;
    z += w * post[std::size_t(i)];
    m1 += w * post[std::size_t(i)] * theta;
    m2 += w * post[std::size_t(i)] * theta * theta;
  }
  const double mean = m1 / z;
  const double var = m2 / z - mean * mean;
  CHECK(state.theta_hat()[0] == doctest::Approx(mean).epsilon(1e-4));
  CHECK(state.covariance()(0, 0) == doctest::Approx(var).epsilon(1e-3));
}

TEST_CASE("meta posterior chains match the joint-model oracle") {
  Rng rng({32});
  for (int chain = 0; chain < 60; ++chain) {
    const int d = 1 + int(rng.uniform_index(4));
    const int tasks = 1 + int(rng.uniform_index(6));
    const double sigma = 0.6 + rng.uniform();
    VectorXd psi(d);
    for (int i = 0; i < d; ++i) psi[i] = rng.normal();
    const MatrixXd Sq = random_psd(rng, d, 1.0);
    // singular Sigma0 in a third of the chains
    MatrixXd S0 = random_psd(rng, d, 0.3);
    if (chain % 3 == 0) {
      S0 = MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        S0(i, i) = (i % 2 == 0) ? 0.05 : 0.0;
      }
    }

    MetaPosteriorState state(psi, Sq);
    std::vector<std::pair<MatrixXd, VectorXd>> task_data;
    for (int l = 0; l < tasks; ++l) {
      const int n = int(rng.uniform_index(10));  // may be zero
      MatrixXd A(n, d);
      VectorXd y(n);
      for (int t = 0; t < n; ++t) {
        // occasionally a rank-deficient design: repeat one direction
        if (t > 0 && rng.uniform() < 0.3) {
          A.row(t) = A.row(0);
        } else {
          for (int i = 0; i < d; ++i) A(t, i) = rng.normal();
        }
        y[t] = rng.normal();
      }
      task_data.emplace_back(A, y);
      TaskSummary summary{A.transpose() * A, A.transpose() * y};
      summary.V = linalg::symmetrize(summary.V);
      state.update(summary, S0, sigma);
    }
    const auto [omean, ocov] =
        joint_model_meta_posterior(psi, Sq, S0, sigma, task_data);
    CHECK((state.theta_hat() - omean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((state.covariance() - ocov).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("meta posterior precision is monotone") {
  Rng rng({33});
  const int d = 3;
  MetaPosteriorState state(VectorXd::Zero(d), MatrixXd::Identity(d, d));
  const MatrixXd S0 = random_psd(rng, d, 0.2);
  for (int l = 0; l < 20; ++l) {
    const MatrixXd before = state.precision();
    const int n = int(rng.uniform_index(8));
    MatrixXd A(n, d);
    VectorXd y(n);
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < d; ++i) A(t, i) = rng.normal();
      y[t] = rng.normal();
    }
    TaskSummary summary{linalg::symmetrize(A.transpose() * A),
                        A.transpose() * y};
    state.update(summary, S0, 1.0);
    CHECK(linalg::psd_geq(state.precision(), before, 1e-9));
  }
}

TEST_CASE("uncertainty_adjusted_prior") {
  const int d = 3;
  const double sq = 1.0, s0 = 0.1;
  const MatrixXd Sq = sq * sq * MatrixXd::Identity(d, d);
  const MatrixXd S0 = s0 * s0 * MatrixXd::Identity(d, d);

  SUBCASE("zero tasks reproduces the agnostic prior") {
    const MetaPosteriorState state(VectorXd::Zero(d), Sq);
    const GaussianBelief prior = uncertainty_adjusted_prior(state, S0);
    CHECK((prior.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((prior.covariance - (sq * sq + s0 * s0) * MatrixXd::Identity(d, d))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
  SUBCASE("covariance approaches Sigma0 after many informative tasks") {
    MetaPosteriorState state(VectorXd::Zero(d), Sq);
    for (int l = 0; l < 2000; ++l) {
      TaskSummary summary{20.0 * MatrixXd::Identity(d, d), VectorXd::Zero(d)};
      state.update(summary, S0, 1.0);
    }
    const GaussianBelief prior = uncertainty_adjusted_prior(state, S0);
    CHECK((prior.covariance - S0).norm() < 0.01 * S0.norm());
  }
  SUBCASE("covariance dominates Sigma0 in the PSD order") {
    Rng rng({34});
    MetaPosteriorState state(VectorXd::Zero(d), Sq);
    const MatrixXd S0r = random_psd(rng, d, 0.3);
    for (int l = 0; l < 10; ++l) {
      const int n = 1 + int(rng.uniform_index(6));
      MatrixXd A(n, d);
      VectorXd y(n);
      for (int t = 0; t < n; ++t) {
        for (int i = 0; i < d; ++i) A(t, i) = rng.normal();
        y[t] = rng.normal();
      }
      TaskSummary summary{linalg::symmetrize(A.transpose() * A),
                          A.transpose() * y};
      state.update(summary, S0r, 1.0);
      const GaussianBelief prior = uncertainty_adjusted_prior(state, S0r);
      CHECK(linalg::psd_geq(prior.covariance, S0r, 1e-9));
    }
  }
}

TEST_CASE("posterior contraction at rate sigma^2/n") {
  const int n = 10000;
  GaussianBelief belief(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  Rng rng({35});
  const VectorXd a = VectorXd::Ones(1);
  for (int t = 0; t < n; ++t) {
    belief = within_task_update(belief, a, rng.normal(0.3, 1.0), 1.0);
  }
  CHECK(belief.covariance(0, 0) ==
        doctest::Approx(1.0 / double(n)).epsilon(0.1));
}

TEST_CASE("beta_update") {
  const BetaBelief b0 = BetaBelief::uniform(2);
  const BetaBelief b1 = beta_update(b0, 0, 1.0);
  CHECK(b1.per_arm[0] == std::pair<double, double>(2.0, 1.0));
  CHECK(b1.per_arm[1] == std::pair<double, double>(1.0, 1.0));

  const BetaBelief b2 = beta_update(BetaBelief({{2.0, 5.0}}), 0, 0.0);
  CHECK(b2.per_arm[0] == std::pair<double, double>(2.0, 6.0));

  BetaBelief acc = BetaBelief::uniform(1);
  for (int i = 0; i < 100; ++i) acc = beta_update(acc, 0, i < 30 ? 1.0 : 0.0);
  CHECK(acc.per_arm[0] == std::pair<double, double>(31.0, 71.0));

  CHECK_THROWS_AS(beta_update(b0, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(beta_update(b0, 5, 1.0), std::out_of_range);
}

TEST_CASE("diagonal and dense meta updates agree") {
  Rng rng({36});
  const int d = 4;
  VectorXd psi(d);
  for (int i = 0; i < d; ++i) psi[i] = rng.normal();
  const MatrixXd Sq = 2.0 * MatrixXd::Identity(d, d);
  const MatrixXd S0 = 0.01 * MatrixXd::Identity(d, d);

  MetaPosteriorState diag_state(psi, Sq);
  MetaPosteriorState dense_state(psi, Sq);
  for (int l = 0; l < 15; ++l) {
    MatrixXd V = MatrixXd::Zero(d, d);
    VectorXd B = VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) {
      const int pulls = int(rng.uniform_index(5));
      V(i, i) = double(pulls);
      for (int p = 0; p < pulls; ++p) B[i] += rng.normal();
    }
    diag_state.update({V, B}, S0, 1.0);
    // a numerically dense copy of the same summary defeats the diagonal path
    MatrixXd Vd = V;
    Vd(0, 1) = Vd(1, 0) = 1e-300;
    dense_state.update({Vd, B}, S0, 1.0);
    CHECK((diag_state.theta_hat() - dense_state.theta_hat())
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((diag_state.precision() - dense_state.precision())
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}
