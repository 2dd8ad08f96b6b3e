#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "metasrm/bandit_core.hpp"
#include "metasrm/environments.hpp"

using namespace metasrm;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Trajectory from_counts(std::initializer_list<int> counts, double base = 0.0) {
  Trajectory t(int(counts.size()));
  int arm = 0;
  for (int c : counts) {
    for (int i = 0; i < c; ++i) t.record(arm, base);
    ++arm;
  }
  return t;
}

}  // namespace

TEST_CASE("best_arm picks the lowest-index maximizer") {
  const NoiseModel g = NoiseModel::gaussian(1.0);
  CHECK(best_arm(TaskInstance(vec({0.1, 0.9, 0.5}), g)) ==
        std::pair<int, double>(1, 0.9));
  CHECK(best_arm(TaskInstance(vec({0.7, 0.7}), g)) ==
        std::pair<int, double>(0, 0.7));

  // feature arms a1=(1,0), a2=(0,1), parameter (0.2, 0.8)
  MatrixXd feats(2, 2);
  feats << 1, 0, 0, 1;
  const ArmSet arms = ArmSet::features(feats);
  const TaskInstance task(arms, vec({0.2, 0.8}), g);
  CHECK(best_arm(task) == std::pair<int, double>(1, 0.8));
}

TEST_CASE("best_arm is invariant to constant mean shifts") {
  Rng rng({99});
  for (int rep = 0; rep < 50; ++rep) {
    const int K = 1 + int(rng.uniform_index(6));
    VectorXd mu(K);
    for (int a = 0; a < K; ++a) mu[a] = rng.normal();
    const double shift = rng.normal(0.0, 10.0);
    const TaskInstance t1(mu, NoiseModel::gaussian(1.0));
    const TaskInstance t2(mu.array() + shift, NoiseModel::gaussian(1.0));
    CHECK(best_arm(t1).first == best_arm(t2).first);
  }
}

TEST_CASE("recommend_by_pull_frequency degenerate and empty cases") {
  Rng rng({5});
  const Trajectory t = from_counts({20, 0, 0});
  for (int i = 0; i < 200; ++i) CHECK(recommend_by_pull_frequency(t, rng) == 0);

  const Trajectory empty(3);
  CHECK_THROWS_AS(recommend_by_pull_frequency(empty, rng),
                  std::invalid_argument);
}

TEST_CASE("recommend_by_pull_frequency matches pull frequencies") {
  Rng rng({6});
  SUBCASE("two arms, even split") {
    const Trajectory t = from_counts({10, 10});
    int first = 0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
      if (recommend_by_pull_frequency(t, rng) == 0) ++first;
    }
    CHECK(std::abs(first / double(N) - 0.5) < 0.01);
  }
  SUBCASE("chi-square against (0.6, 0.3, 0.1)") {
    const Trajectory t = from_counts({12, 6, 2});
    const int N = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < N; ++i) ++counts[recommend_by_pull_frequency(t, rng)];
    const double expected[3] = {0.6 * N, 0.3 * N, 0.1 * N};
    double chi2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double diff = counts[a] - expected[a];
      chi2 += diff * diff / expected[a];
    }
    // 2 degrees of freedom; 13.8 is the 0.999 quantile
    CHECK(chi2 < 13.8);
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(counts[a] / double(N) - expected[a] / N) < 0.01);
    }
  }
}

TEST_CASE("regret values on worked examples") {
  const NoiseModel g = NoiseModel::gaussian(1.0);
  const TaskInstance task(vec({1.0, 0.5}), g);
  const Trajectory t = from_counts({15, 5});
  CHECK(cumulative_regret(task, t) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(expected_recommendation_regret(task, t) ==
        doctest::Approx(0.125).epsilon(1e-12));
  // the reduction identity on this instance
  CHECK(expected_recommendation_regret(task, t) ==
        doctest::Approx(cumulative_regret(task, t) / 20.0).epsilon(1e-12));

  const TaskInstance single(vec({0.3}), g);
  CHECK(expected_recommendation_regret(single, from_counts({7})) == 0.0);

  const TaskInstance equal(vec({0.9, 0.9}), g);
  CHECK(cumulative_regret(equal, from_counts({3, 17})) ==
        doctest::Approx(0.0).epsilon(1e-15));

  // all pulls on the best arm (up to summation round-off)
  const TaskInstance task2(vec({0.2, 0.8}), g);
  CHECK(std::abs(cumulative_regret(task2, from_counts({0, 9}))) < 1e-12);
}

TEST_CASE("reduction identity over random tasks and trajectories") {
  Rng rng({7});
  for (int rep = 0; rep < 2000; ++rep) {
    const int K = 1 + int(rng.uniform_index(8));
    const int n = 1 + int(rng.uniform_index(50));
    VectorXd mu(K);
    for (int a = 0; a < K; ++a) mu[a] = rng.normal(0.0, 2.0);
    const TaskInstance task(mu, NoiseModel::gaussian(1.0));
    Trajectory traj(K);
    for (int t = 0; t < n; ++t) {
      traj.record(int(rng.uniform_index(std::uint64_t(K))), rng.normal());
    }
    const double lhs = expected_recommendation_regret(task, traj);
    const double rhs = cumulative_regret(task, traj) / double(n);
    CHECK(std::abs(lhs - rhs) < 1e-12);
    CHECK(lhs >= -1e-15);
    CHECK(cumulative_regret(task, traj) >= -1e-12);
    CHECK(std::isfinite(lhs));
  }
}

TEST_CASE("aggregate_regret means and standard errors") {
  SUBCASE("single replication has zero standard error") {
    RegretLedger ledger;
    ledger.append({0, 1, "a", 0.1, 0.0, 2.0});
    ledger.append({0, 2, "a", 0.2, 0.0, 4.0});
    const auto curves =
        aggregate_regret(ledger, AggregateMode::BayesMonteCarlo);
    REQUIRE(curves.size() == 1);
    REQUIRE(curves[0].points.size() == 2);
    CHECK(curves[0].points[0].mean == doctest::Approx(0.1));
    CHECK(curves[0].points[0].stderr_ == 0.0);
    CHECK(curves[0].points[1].mean == doctest::Approx(0.2));
    CHECK(curves[0].points[1].cum_mean == doctest::Approx(0.15));
  }
  SUBCASE("identical replications have zero standard error") {
    RegretLedger ledger;
    for (int rep = 0; rep < 2; ++rep) {
      ledger.append({rep, 1, "a", 0.1, 0.0, 2.0});
      ledger.append({rep, 2, "a", 0.2, 0.0, 4.0});
    }
    const auto curves = aggregate_regret(ledger, AggregateMode::Frequentist);
    CHECK(curves[0].points[0].stderr_ == 0.0);
    CHECK(curves[0].points[1].stderr_ == 0.0);
  }
  SUBCASE("synthetic ledger with known mean") {
    Rng rng({8});
    RegretLedger ledger;
    const int R = 100;
    const double pop_mean = 0.4, pop_sd = 0.05;
    for (int rep = 0; rep < R; ++rep) {
      ledger.append({rep, 1, "a", rng.normal(pop_mean, pop_sd), 0.0, 0.0});
    }
    const auto curves =
        aggregate_regret(ledger, AggregateMode::BayesMonteCarlo);
    const auto& p = curves[0].points[0];
    CHECK(std::abs(p.mean - pop_mean) < 3.0 * p.stderr_ + 1e-12);
    CHECK(p.stderr_ == doctest::Approx(pop_sd / std::sqrt(double(R))).epsilon(0.3));
  }
  SUBCASE("inconsistent task ranges are rejected") {
    RegretLedger ledger;
    ledger.append({0, 1, "a", 0.1, 0.0, 2.0});
    ledger.append({0, 2, "a", 0.2, 0.0, 4.0});
    ledger.append({1, 1, "a", 0.1, 0.0, 2.0});
    CHECK_THROWS_AS(aggregate_regret(ledger, AggregateMode::Frequentist),
                    std::invalid_argument);
  }
  SUBCASE("empty ledger is rejected") {
    CHECK_THROWS_AS(aggregate_regret(RegretLedger{}, AggregateMode::Frequentist),
                    std::invalid_argument);
  }
}

TEST_CASE("arm set validation") {
  CHECK_THROWS_AS(ArmSet::finite(0), std::invalid_argument);
  MatrixXd feats(1, 2);
  feats << 3.0, 4.0;  // norm 5 > 1
  CHECK_THROWS_AS(ArmSet::features(feats), std::invalid_argument);
  const TaskInstance ok(vec({0.5}), NoiseModel::bernoulli());
  CHECK(ok.mean(0) == 0.5);
  CHECK_THROWS_AS(TaskInstance(vec({1.5}), NoiseModel::bernoulli()),
                  std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel::gaussian(0.0), std::invalid_argument);
}
