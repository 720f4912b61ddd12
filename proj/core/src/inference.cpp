#include "awl/inference.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "awl/errors.hpp"

namespace awl {

Matrix b_matrix(const PseudoLikelihood& problem, const Vector& theta_hat, double beta_hat) {
  auto terms = problem.evaluate(theta_hat, beta_hat, PseudoLikelihood::Order::kHessian);
  return terms.information / static_cast<double>(problem.n());
}

Matrix b_matrix(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
                const WeightShape& shape, const Vector& theta_hat, double beta_hat,
                const DoseGrid& grid) {
  return b_matrix(PseudoLikelihood(data, q_y, q_z, shape, grid), theta_hat, beta_hat);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

InferenceResult infer(const PseudoLikelihood& problem, const EstimateResult& est, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("infer: level must lie in (0, 1)");
  InferenceResult out;
  out.ci_level = level;
  out.b_hat = b_matrix(problem, est.theta_hat, est.beta_hat);
  out.condition = symmetric_condition(out.b_hat);
  if (!(out.condition <= kNearSingularCondition)) {
    throw InferenceDeclined("NEAR_SINGULAR: information matrix condition estimate " +
                                std::to_string(out.condition) + " exceeds 1e10",
                            out.condition);
  }
  Eigen::LDLT<Matrix> ldlt(out.b_hat);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw InferenceDeclined("NEAR_SINGULAR: information matrix is not positive definite",
                            out.condition);
  }
  const auto k = out.b_hat.rows();
  out.cov_hat = ldlt.solve(Matrix::Identity(k, k)) / static_cast<double>(problem.n());
  out.cov_hat = 0.5 * (out.cov_hat + out.cov_hat.transpose()).eval();
  if ((out.cov_hat.diagonal().array() <= 0.0).any()) {
    throw InferenceDeclined("NEAR_SINGULAR: non-positive variance", out.condition);
  }

  out.estimates = pack_params(est.beta_hat, est.theta_hat);
  out.se = out.cov_hat.diagonal().cwiseSqrt();
  out.z_stats = out.estimates.cwiseQuotient(out.se);
  out.p_values = out.z_stats.unaryExpr([](double z) { return two_sided_p(z); });
  const double crit = normal_quantile(0.5 + 0.5 * level);
  out.ci_lo = out.estimates - crit * out.se;
  out.ci_hi = out.estimates + crit * out.se;
  return out;
}

WaldTest wald(const EstimateResult& est, const InferenceResult& inf, int component,
              double null_value) {
  if (component < 0 || component >= inf.se.size()) {
    throw InputError("wald: component index out of range");
  }
  const double se = inf.se[component];
  if (!(se > 0.0)) throw InferenceError("wald: zero standard error");
  const double estimate = pack_params(est.beta_hat, est.theta_hat)[component];
  WaldTest t;
  t.z = (estimate - null_value) / se;
  t.p = two_sided_p(t.z);
  return t;
}

namespace {

double weight_se(const WeightShape& shape, const Vector& theta_hat, const Matrix& cov_theta,
                 const Vector& x) {
  if (cov_theta.rows() != theta_hat.size() || cov_theta.cols() != theta_hat.size()) {
    throw InputError("weight_ci: covariance does not match theta");
  }
  const Vector g = weight_grad(PreferenceModel(shape, theta_hat), x);
  return std::sqrt(std::max(0.0, g.dot(cov_theta * g)));
}

}  // namespace

WeightInterval weight_ci(const WeightShape& shape, const Vector& theta_hat, const Matrix& cov_theta,
                         const Vector& x, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("weight_ci: level must lie in (0, 1)");
  WeightInterval out;
  out.w_hat = weight(PreferenceModel(shape, theta_hat), x);
  out.se = weight_se(shape, theta_hat, cov_theta, x);
  const double half = normal_quantile(0.5 + 0.5 * level) * out.se;
  out.lo = std::clamp(out.w_hat - half, 0.0, 1.0);
  out.hi = std::clamp(out.w_hat + half, 0.0, 1.0);
  return out;
}

WaldTest wald_weight(const WeightShape& shape, const Vector& theta_hat, const Matrix& cov_theta,
                     const Vector& x, double null_weight) {
  const double se = weight_se(shape, theta_hat, cov_theta, x);
  if (!(se > 0.0)) throw InferenceError("wald_weight: zero standard error");
  WaldTest t;
  t.z = (weight(PreferenceModel(shape, theta_hat), x) - null_weight) / se;
  t.p = two_sided_p(t.z);
  return t;
}

}  // namespace awl
