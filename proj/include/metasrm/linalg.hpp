#pragma once

#include <Eigen/Dense>

#include "metasrm/rng.hpp"

namespace metasrm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace linalg {

constexpr double kPsdTol = 1e-10;

inline MatrixXd symmetrize(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

bool is_symmetric(const MatrixXd& m, double tol = kPsdTol);

// Throws std::invalid_argument unless m is symmetric within tol and its
// eigenvalues are all >= -tol. Eigenvalues in (-tol, 0) count as zero.
void require_psd(const MatrixXd& m, const char* what, double tol = kPsdTol);

// True iff a - b is PSD within tol.
bool psd_geq(const MatrixXd& a, const MatrixXd& b, double tol = kPsdTol);

// True iff every off-diagonal entry is exactly zero.
bool is_exactly_diagonal(const MatrixXd& m);

// Square factor L with L L^T = cov (eigendecomposition, negative eigenvalues
// in (-tol, 0) clamped to zero, below -tol -> error). Handles singular and
// rank-deficient covariances; exactly diagonal input yields sqrt(diag).
MatrixXd mvn_factor(const MatrixXd& cov, double tol = kPsdTol);

// Multivariate normal sampler with the factor computed once.
class MvnSampler {
 public:
  MvnSampler(VectorXd mean, const MatrixXd& cov);

  VectorXd sample(Rng& rng) const;
  int dim() const { return int(mean_.size()); }

 private:
  VectorXd mean_;
  MatrixXd factor_;   // empty when diagonal_
  VectorXd sqrt_diag_;
  bool diagonal_;
};

// One-shot draw from N(mean, cov).
VectorXd mvn_sample(const VectorXd& mean, const MatrixXd& cov, Rng& rng);

}  // namespace linalg
}  // namespace metasrm
