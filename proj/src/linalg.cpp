#include "metasrm/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace metasrm::linalg {

bool is_symmetric(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

void require_psd(const MatrixXd& m, const char* what, double tol) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
  if (!is_symmetric(m, tol)) {
    throw std::invalid_argument(std::string(what) +
                                ": matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m),
                                             Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) {
    throw std::invalid_argument(
        std::string(what) + ": matrix must be positive semi-definite "
        "(min eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) +
        ")");
  }
}

bool psd_geq(const MatrixXd& a, const MatrixXd& b, double tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(a - b),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

bool is_exactly_diagonal(const MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

MatrixXd mvn_factor(const MatrixXd& cov, double tol) {
  if (is_exactly_diagonal(cov)) {
    MatrixXd f = MatrixXd::Zero(cov.rows(), cov.cols());
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
      const double v = cov(i, i);
      if (v < -tol) {
        throw std::invalid_argument("mvn_factor: negative variance");
      }
      f(i, i) = std::sqrt(std::max(0.0, v));
    }
    return f;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(cov));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("mvn_factor: eigendecomposition failed");
  }
  VectorXd evals = es.eigenvalues();
  if (evals.minCoeff() < -tol) {
    throw std::invalid_argument(
        "mvn_factor: covariance has eigenvalue below -" + std::to_string(tol));
  }
  VectorXd sq = evals.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sq.asDiagonal();
}

MvnSampler::MvnSampler(VectorXd mean, const MatrixXd& cov)
    : mean_(std::move(mean)), diagonal_(is_exactly_diagonal(cov)) {
  if (cov.rows() != mean_.size()) {
    throw std::invalid_argument("MvnSampler: dimension mismatch");
  }
  if (diagonal_) {
    sqrt_diag_ = VectorXd(cov.rows());
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
      const double v = cov(i, i);
      if (v < -kPsdTol) {
        throw std::invalid_argument("MvnSampler: negative variance");
      }
      sqrt_diag_[i] = std::sqrt(std::max(0.0, v));
    }
  } else {
    factor_ = mvn_factor(cov);
  }
}

VectorXd MvnSampler::sample(Rng& rng) const {
  VectorXd z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  if (diagonal_) return mean_ + sqrt_diag_.cwiseProduct(z);
  return mean_ + factor_ * z;
}

VectorXd mvn_sample(const VectorXd& mean, const MatrixXd& cov, Rng& rng) {
  // Diagonal covariances bypass the eigendecomposition so the diagonal and
  // dense code paths consume the random stream identically.
  if (is_exactly_diagonal(cov)) {
    VectorXd out(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      const double v = std::max(0.0, cov(i, i));
      out[i] = mean[i] + std::sqrt(v) * rng.normal();
    }
    return out;
  }
  MatrixXd f = mvn_factor(cov);
  VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + f * z;
}

}  // namespace metasrm::linalg
