#include "metasrm/posteriors.hpp"

#include <cmath>
#include <stdexcept>

namespace metasrm {

GaussianBelief::GaussianBelief(VectorXd m, MatrixXd cov)
    : mean(std::move(m)), covariance(std::move(cov)) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw std::invalid_argument("GaussianBelief: dimension mismatch");
  }
  if (!linalg::is_symmetric(covariance)) {
    throw std::invalid_argument("GaussianBelief: covariance must be symmetric");
  }
  covariance = linalg::symmetrize(covariance);
}

GaussianBelief within_task_update(const GaussianBelief& belief,
                                  const VectorXd& arm_feature, double reward,
                                  double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("within_task_update: sigma must be > 0");
  }
  if (arm_feature.size() != belief.dim()) {
    throw std::invalid_argument("within_task_update: dimension mismatch");
  }
  const VectorXd Sa = belief.covariance * arm_feature;
  const double denom = sigma * sigma + arm_feature.dot(Sa);
  // a = 0 gives denom = sigma^2 > 0 and a zero-gain update.
  VectorXd mean = belief.mean + Sa * ((reward - arm_feature.dot(belief.mean)) / denom);
  MatrixXd cov = belief.covariance - (Sa * Sa.transpose()) / denom;
  return GaussianBelief(std::move(mean), linalg::symmetrize(cov));
}

TaskSummary summarize_task(const Trajectory& trajectory, const ArmSet& arms) {
  const int d = arms.dim();
  TaskSummary s{MatrixXd::Zero(d, d), VectorXd::Zero(d)};
  if (arms.kind() == ArmSet::Kind::FiniteIndexed) {
    for (const auto& [arm, reward] : trajectory.steps()) {
      s.V(arm, arm) += 1.0;
      s.B[arm] += reward;
    }
  } else {
    for (const auto& [arm, reward] : trajectory.steps()) {
      const auto a = arms.feature_matrix().row(arm);
      s.V += a.transpose() * a;
      s.B += a.transpose() * reward;
    }
    s.V = linalg::symmetrize(s.V);
  }
  return s;
}

MetaPosteriorState::MetaPosteriorState(const VectorXd& psi_q,
                                       const MatrixXd& Sigma_q) {
  if (Sigma_q.rows() != psi_q.size() || Sigma_q.cols() != psi_q.size()) {
    throw std::invalid_argument("MetaPosteriorState: dimension mismatch");
  }
  linalg::require_psd(Sigma_q, "MetaPosteriorState Sigma_q");
  if (linalg::is_exactly_diagonal(Sigma_q)) {
    const auto dq = Sigma_q.rows();
    precision_ = MatrixXd::Zero(dq, dq);
    for (Eigen::Index i = 0; i < dq; ++i) {
      if (!(Sigma_q(i, i) > 0.0)) {
        throw std::invalid_argument(
            "MetaPosteriorState: Sigma_q must be positive definite");
      }
      precision_(i, i) = 1.0 / Sigma_q(i, i);
    }
  } else {
    Eigen::LDLT<MatrixXd> ldlt(linalg::symmetrize(Sigma_q));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0) {
      throw std::invalid_argument(
          "MetaPosteriorState: Sigma_q must be positive definite");
    }
    precision_ = linalg::symmetrize(
        ldlt.solve(MatrixXd::Identity(Sigma_q.rows(), Sigma_q.cols())));
  }
  natural_ = precision_ * psi_q;
  theta_hat_ = psi_q;
}

void MetaPosteriorState::update(const TaskSummary& summary,
                                const MatrixXd& Sigma0, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("MetaPosteriorState: sigma must be > 0");
  }
  const int d = int(natural_.size());
  if (summary.V.rows() != d || Sigma0.rows() != d) {
    throw std::invalid_argument("MetaPosteriorState: dimension mismatch");
  }
  ++tasks_seen_;
  const double s2 = sigma * sigma;
  const MatrixXd W = summary.V / s2;
  const VectorXd b = summary.B / s2;

  if (linalg::is_exactly_diagonal(W) && linalg::is_exactly_diagonal(Sigma0) &&
      linalg::is_exactly_diagonal(precision_)) {
    // Coordinate-wise form of the increment; keeps diagonal states exactly
    // diagonal so the downstream fast paths stay active.
    for (int i = 0; i < d; ++i) {
      const double w = W(i, i);
      if (w <= 0.0) continue;
      const double g = 1.0 / (1.0 / Sigma0(i, i) + w);  // Sigma0 > 0 here
      const double gi = Sigma0(i, i) > 0.0 ? g : 0.0;
      precision_(i, i) += w - w * gi * w;
      natural_[i] += b[i] - w * gi * b[i];
    }
    for (int i = 0; i < d; ++i) theta_hat_[i] = natural_[i] / precision_(i, i);
    return;
  }

  // Factor W = F F^T keeping only the explored directions, then
  //   G := (Sigma0^-1 + W)^-1 = Sigma0 - Sigma0 F (I + F^T Sigma0 F)^-1 F^T Sigma0
  // which stays valid (by continuity) when Sigma0 is singular.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(linalg::symmetrize(W));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("MetaPosteriorState: eigendecomposition failed");
  }
  const VectorXd evals = es.eigenvalues();
  const double emax = evals.size() ? std::max(0.0, evals.maxCoeff()) : 0.0;
  const double cut = std::max(1e-14 * emax, 0.0);
  std::vector<int> keep;
  for (int i = 0; i < evals.size(); ++i) {
    if (evals[i] > cut) keep.push_back(i);
  }
  if (!keep.empty()) {
    MatrixXd F(d, int(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      F.col(Eigen::Index(j)) =
          es.eigenvectors().col(keep[j]) * std::sqrt(evals[keep[j]]);
    }
    const MatrixXd FtS = F.transpose() * Sigma0;              // r x d
    MatrixXd core = MatrixXd::Identity(int(keep.size()), int(keep.size())) +
                    FtS * F;                                   // I + F^T S F
    Eigen::LDLT<MatrixXd> ldlt(linalg::symmetrize(core));
    if (ldlt.info() != Eigen::Success) {
      throw std::runtime_error("MetaPosteriorState: core solve failed");
    }
    const MatrixXd G =
        linalg::symmetrize(Sigma0 - FtS.transpose() * ldlt.solve(FtS));
    precision_ = linalg::symmetrize(precision_ + W - W * G * W);
    natural_ += b - W * (G * b);
  }
  // keep empty: V = 0, no pulls, state unchanged (b is then zero too).

  Eigen::LDLT<MatrixXd> prec(precision_);
  if (prec.info() != Eigen::Success) {
    throw std::runtime_error("MetaPosteriorState: precision solve failed");
  }
  theta_hat_ = prec.solve(natural_);
}

MatrixXd MetaPosteriorState::covariance() const {
  const int d = int(natural_.size());
  if (linalg::is_exactly_diagonal(precision_)) {
    MatrixXd cov = MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) cov(i, i) = 1.0 / precision_(i, i);
    return cov;
  }
  Eigen::LDLT<MatrixXd> prec(precision_);
  return linalg::symmetrize(prec.solve(MatrixXd::Identity(d, d)));
}

GaussianBelief uncertainty_adjusted_prior(const MetaPosteriorState& state,
                                          const MatrixXd& Sigma0) {
  return GaussianBelief(state.theta_hat(),
                        linalg::symmetrize(state.covariance() + Sigma0));
}

BetaBelief::BetaBelief(std::vector<std::pair<double, double>> ab)
    : per_arm(std::move(ab)) {
  if (per_arm.empty()) {
    throw std::invalid_argument("BetaBelief: need at least one arm");
  }
  for (const auto& [a, b] : per_arm) {
    if (!(a > 0.0) || !(b > 0.0)) {
      throw std::invalid_argument("BetaBelief: parameters must be > 0");
    }
  }
}

BetaBelief BetaBelief::uniform(int K) {
  return BetaBelief(std::vector<std::pair<double, double>>(K, {1.0, 1.0}));
}

BetaBelief beta_update(const BetaBelief& belief, int arm, double reward) {
  if (arm < 0 || arm >= belief.num_arms()) {
    throw std::out_of_range("beta_update: arm index");
  }
  if (reward != 0.0 && reward != 1.0) {
    throw std::invalid_argument("beta_update: reward must be 0 or 1");
  }
  BetaBelief out = belief;
  out.per_arm[arm].first += reward;
  out.per_arm[arm].second += 1.0 - reward;
  return out;
}

}  // namespace metasrm
