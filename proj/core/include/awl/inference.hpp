#pragma once

#include <span>

#include "awl/pseudo_likelihood.hpp"

namespace awl {

// Asymptotic inference for (beta, theta): sqrt(n)(est - truth) -> N(0, B^-1),
// where B is the mean over observations of the conditional covariance of
// (Q_theta(x, A), beta R(x, A) w'(x; theta)) under the fitted assignment density.
struct InferenceResult {
  Matrix b_hat;
  Matrix cov_hat;     // B^-1 / n
  Vector estimates;   // (beta, theta)
  Vector se;
  Vector z_stats;     // against zero
  Vector p_values;
  double ci_level = 0.95;
  Vector ci_lo;
  Vector ci_hi;
  double condition = 0.0;

  Matrix cov_theta() const { return cov_hat.bottomRightCorner(cov_hat.rows() - 1, cov_hat.cols() - 1); }
};

Matrix b_matrix(const PseudoLikelihood& problem, const Vector& theta_hat, double beta_hat);
Matrix b_matrix(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
                const WeightShape& shape, const Vector& theta_hat, double beta_hat,
                const DoseGrid& grid);

// Throws InferenceDeclined when B is numerically singular.
InferenceResult infer(const PseudoLikelihood& problem, const EstimateResult& est,
                      double level = 0.95);

struct WaldTest {
  double z = 0.0;
  double p = 1.0;
};

double normal_cdf(double z);
double normal_quantile(double p);
double two_sided_p(double z);

// component indexes the packed (beta, theta) vector.
WaldTest wald(const EstimateResult& est, const InferenceResult& inf, int component,
              double null_value);

struct WeightInterval {
  double w_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
};

// Delta-method interval for w(x; theta), clipped to [0, 1].
WeightInterval weight_ci(const WeightShape& shape, const Vector& theta_hat, const Matrix& cov_theta,
                         const Vector& x, double level = 0.95);

// Delta-method Wald test of w(x; theta) = null_weight.
WaldTest wald_weight(const WeightShape& shape, const Vector& theta_hat, const Matrix& cov_theta,
                     const Vector& x, double null_weight);

}  // namespace awl
