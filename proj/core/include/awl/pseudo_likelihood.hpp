#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "awl/model_core.hpp"

namespace awl {

// Parameters are packed as (beta, theta_0, ..., theta_{q-1}) throughout.
Vector pack_params(double beta, const Vector& theta);
double unpack_beta(const Vector& params);
Vector unpack_theta(const Vector& params);

// Log pseudo-likelihood of observed doses under the assignment density, with
// plug-in outcome surfaces. Surface values on the grid are tabulated once per
// observation at construction; evaluation is then O(n m) per call.
class PseudoLikelihood {
 public:
  enum class Order { kValue, kScore, kHessian };

  struct Terms {
    double loglik = 0.0;
    Vector score;        // empty below Order::kScore
    Matrix hessian;      // empty below Order::kHessian
    Matrix information;  // sum_i Cov[(Q, beta R w') | x_i]; empty below Order::kHessian
  };

  PseudoLikelihood(std::span<const Sample> data, const OutcomeSurface& q_y,
                   const OutcomeSurface& q_z, WeightShape shape, DoseGrid grid);

  int n() const noexcept { return static_cast<int>(qz_obs_.size()); }
  int n_params() const noexcept { return 1 + shape_.dimension(); }
  const WeightShape& shape() const noexcept { return shape_; }
  const DoseGrid& grid() const noexcept { return grid_; }

  Terms evaluate(const Vector& theta, double beta, Order order) const;

  double loglik(const Vector& theta, double beta) const;
  Vector score(const Vector& theta, double beta) const;
  Matrix hessian(const Vector& theta, double beta) const;

 private:
  WeightShape shape_;
  DoseGrid grid_;
  Matrix qz_grid_;  // m x n
  Matrix r_grid_;   // m x n, Q_Y - Q_Z
  Vector qz_obs_;
  Vector r_obs_;
  Matrix xw_;       // q x n weight designs
};

double loglik(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
              const WeightShape& shape, const Vector& theta, double beta, const DoseGrid& grid);
Vector score(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
             const WeightShape& shape, const Vector& theta, double beta, const DoseGrid& grid);
Matrix hessian(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
               const WeightShape& shape, const Vector& theta, double beta, const DoseGrid& grid);

struct FitConfig {
  DoseGrid grid{-6.0, 6.0, 241};
  double tol_grad = 1e-8;  // on ||score|| / n
  int max_iter = 200;
  Vector init_theta;       // empty: zeros
  double init_beta = 0.1;
  int n_restarts = 3;      // jittered starts in addition to the primary one
  std::uint64_t jitter_seed = 0x5eed;
};

struct FitFlags {
  bool beta_nonpositive = false;
  bool near_singular = false;
  bool max_iter = false;

  bool any() const noexcept { return beta_nonpositive || near_singular || max_iter; }
  std::vector<std::string> names() const;
};

struct EstimateResult {
  Vector theta_hat;
  double beta_hat = 0.0;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;  // ||score|| / n at the solution
  FitFlags flags;
  double hessian_condition = 0.0;
  Matrix hessian;
  std::vector<double> trace;  // loglik after each accepted step of the winning start
};

// Condition numbers above this mark the problem as numerically singular.
inline constexpr double kNearSingularCondition = 1e10;

// |lambda|_max / |lambda|_min of a symmetric matrix; +inf when singular.
double symmetric_condition(const Matrix& m);

// Newton ascent with step halving; gradient ascent with backtracking whenever
// the Newton direction is not an ascent direction. The best of the primary and
// jittered starts wins.
EstimateResult fit(const PseudoLikelihood& problem, const FitConfig& config);

EstimateResult fit(std::span<const Sample> data, const OutcomeSurface& q_y,
                   const OutcomeSurface& q_z, const WeightShape& shape, const FitConfig& config);

}  // namespace awl
