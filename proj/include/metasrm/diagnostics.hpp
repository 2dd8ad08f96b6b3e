#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "metasrm/posteriors.hpp"

namespace metasrm {

struct DistanceReport {
  double kl = 0.0;
  double pinsker_tv_bound = 0.0;          // min(1, sqrt(kl/2))
  std::optional<double> exact_tv;          // equal isotropic covariances only
};

// KL(p || q) for Gaussians. Requires q.covariance PD; returns +infinity when
// p.covariance is singular (p not absolutely continuous w.r.t. q). Identical
// stored representations return exactly 0.
double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q);

// KL plus the Pinsker bound; exact TV = erf(||dm|| / (2 sqrt(2) s0)) is
// filled only when both covariances are the same isotropic s0^2 I.
DistanceReport tv_report(const GaussianBelief& p, const GaussianBelief& q);

// Test oracle: the batch conjugate posterior from the stacked design, in one
// shot. Independent of within_task_update. Requires d <= 5 and PD prior.
GaussianBelief brute_force_gaussian_posterior(
    const GaussianBelief& prior,
    const std::vector<std::pair<VectorXd, double>>& observations,
    double sigma);

// d = 1 fallback oracle: posterior mean/variance by dense-grid integration of
// prior(theta) * likelihood(theta) over [center - half_width, center + half_width].
GaussianBelief brute_force_gaussian_posterior_grid(
    const GaussianBelief& prior,
    const std::vector<std::pair<double, double>>& observations, double sigma,
    double half_width, int num_points);

// Exact first and second moments of Beta-Binomial(alpha, beta, t0), by
// summation over the pmf.
std::pair<double, double> beta_binomial_moment_oracle(double alpha,
                                                      double beta, int t0);

double beta_binomial_pmf(double alpha, double beta, int t0, int k);

}  // namespace metasrm
