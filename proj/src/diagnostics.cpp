#include "metasrm/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metasrm {

namespace {

// Log-determinant from an LDLT factorization; -infinity when not PD.
double ldlt_logdet(const Eigen::LDLT<MatrixXd>& ldlt) {
  const auto& d = ldlt.vectorD();
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] <= 0.0) return -std::numeric_limits<double>::infinity();
    s += std::log(d[i]);
  }
  return s;
}

bool isotropic_value(const MatrixXd& m, double& out) {
  if (!linalg::is_exactly_diagonal(m)) return false;
  const double v = m(0, 0);
  for (Eigen::Index i = 1; i < m.rows(); ++i) {
    if (m(i, i) != v) return false;
  }
  out = v;
  return true;
}

}  // namespace

double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q) {
  if (p.dim() != q.dim()) {
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  }
  if (p.mean == q.mean && p.covariance == q.covariance) return 0.0;

  Eigen::LDLT<MatrixXd> lq(q.covariance);
  if (lq.info() != Eigen::Success || !lq.isPositive() ||
      lq.vectorD().minCoeff() <= 0.0) {
    throw std::invalid_argument(
        "gaussian_kl: q covariance must be positive definite");
  }
  Eigen::LDLT<MatrixXd> lp(p.covariance);
  const double logdet_p = ldlt_logdet(lp);
  if (!std::isfinite(logdet_p)) {
    return std::numeric_limits<double>::infinity();
  }
  const double d = double(p.dim());
  const double trace = lq.solve(p.covariance).trace();
  const VectorXd dm = q.mean - p.mean;
  const double maha = dm.dot(lq.solve(dm));
  const double kl =
      0.5 * (trace - d + maha + ldlt_logdet(lq) - logdet_p);
  return std::max(0.0, kl);
}

DistanceReport tv_report(const GaussianBelief& p, const GaussianBelief& q) {
  DistanceReport r;
  r.kl = gaussian_kl(p, q);
  r.pinsker_tv_bound = std::min(1.0, std::sqrt(0.5 * r.kl));
  double vp = 0.0, vq = 0.0;
  if (isotropic_value(p.covariance, vp) && isotropic_value(q.covariance, vq) &&
      vp == vq) {
    const double dist = (p.mean - q.mean).norm();
    if (vp > 0.0) {
      r.exact_tv = std::erf(dist / (2.0 * std::sqrt(2.0 * vp)));
    } else {
      r.exact_tv = dist == 0.0 ? 0.0 : 1.0;
    }
  }
  return r;
}

GaussianBelief brute_force_gaussian_posterior(
    const GaussianBelief& prior,
    const std::vector<std::pair<VectorXd, double>>& observations,
    double sigma) {
  if (prior.dim() > 5) {
    throw std::invalid_argument(
        "brute_force_gaussian_posterior: d must be <= 5");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument(
        "brute_force_gaussian_posterior: sigma must be > 0");
  }
  const int d = prior.dim();
  Eigen::LDLT<MatrixXd> l0(prior.covariance);
  if (l0.info() != Eigen::Success || !l0.isPositive() ||
      l0.vectorD().minCoeff() <= 0.0) {
    throw std::invalid_argument(
        "brute_force_gaussian_posterior: prior covariance must be PD");
  }
  const MatrixXd prior_prec = l0.solve(MatrixXd::Identity(d, d));
  MatrixXd lambda = prior_prec;
  VectorXd h = prior_prec * prior.mean;
  const double s2 = sigma * sigma;
  for (const auto& [a, y] : observations) {
    if (a.size() != d) {
      throw std::invalid_argument(
          "brute_force_gaussian_posterior: feature dimension mismatch");
    }
    lambda += (a * a.transpose()) / s2;
    h += a * (y / s2);
  }
  Eigen::LDLT<MatrixXd> ll(linalg::symmetrize(lambda));
  MatrixXd cov = linalg::symmetrize(ll.solve(MatrixXd::Identity(d, d)));
  return GaussianBelief(ll.solve(h), std::move(cov));
}

GaussianBelief brute_force_gaussian_posterior_grid(
    const GaussianBelief& prior,
    const std::vector<std::pair<double, double>>& observations, double sigma,
    double half_width, int num_points) {
  if (prior.dim() != 1) {
    throw std::invalid_argument(
        "brute_force_gaussian_posterior_grid: d must be 1");
  }
  if (num_points < 3 || !(half_width > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument(
        "brute_force_gaussian_posterior_grid: bad grid parameters");
  }
  const double m0 = prior.mean[0];
  const double v0 = prior.covariance(0, 0);
  if (!(v0 > 0.0)) {
    throw std::invalid_argument(
        "brute_force_gaussian_posterior_grid: prior variance must be > 0");
  }
  const double lo = m0 - half_width, hi = m0 + half_width;
  const double dx = (hi - lo) / double(num_points - 1);
  const double s2 = sigma * sigma;

  // Trapezoid rule over the unnormalized log posterior, shifted for stability.
  std::vector<double> logp(num_points);
  double logmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < num_points; ++i) {
    const double theta = lo + dx * double(i);
    double lp = -0.5 * (theta - m0) * (theta - m0) / v0;
    for (const auto& [a, y] : observations) {
      const double r = y - a * theta;
      lp += -0.5 * r * r / s2;
    }
    logp[i] = lp;
    logmax = std::max(logmax, lp);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < num_points; ++i) {
    const double theta = lo + dx * double(i);
    double w = std::exp(logp[i] - logmax);
    if (i == 0 || i == num_points - 1) w *= 0.5;
    z += w;
    m1 += w * theta;
    m2 += w * theta * theta;
  }
  const double mean = m1 / z;
  const double var = m2 / z - mean * mean;
  VectorXd mv(1);
  mv[0] = mean;
  MatrixXd cv(1, 1);
  cv(0, 0) = var;
  return GaussianBelief(mv, cv);
}

double beta_binomial_pmf(double alpha, double beta, int t0, int k) {
  if (!(alpha > 0.0) || !(beta > 0.0) || t0 < 0 || k < 0 || k > t0) {
    throw std::invalid_argument("beta_binomial_pmf: invalid arguments");
  }
  const double lchoose =
      std::lgamma(t0 + 1.0) - std::lgamma(k + 1.0) - std::lgamma(t0 - k + 1.0);
  const double lbeta_num = std::lgamma(k + alpha) + std::lgamma(t0 - k + beta) -
                           std::lgamma(t0 + alpha + beta);
  const double lbeta_den =
      std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  return std::exp(lchoose + lbeta_num - lbeta_den);
}

std::pair<double, double> beta_binomial_moment_oracle(double alpha,
                                                      double beta, int t0) {
  if (t0 < 1) {
    throw std::invalid_argument("beta_binomial_moment_oracle: t0 must be >= 1");
  }
  double m1 = 0.0, m2 = 0.0;
  for (int k = 0; k <= t0; ++k) {
    const double p = beta_binomial_pmf(alpha, beta, t0, k);
    m1 += p * double(k);
    m2 += p * double(k) * double(k);
  }
  return {m1, m2};
}

}  // namespace metasrm
