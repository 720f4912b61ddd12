#pragma once

#include <span>

#include "awl/model_core.hpp"

namespace awl {

// Assignment density f(a | x) proportional to exp{beta Q_theta(x, a)} on a
// dose grid, normalized by the grid's quadrature rule.
class ConditionalDensity {
 public:
  ConditionalDensity(DoseGrid grid, Vector log_unnorm);

  const DoseGrid& grid() const noexcept { return grid_; }
  const Vector& log_unnorm() const noexcept { return log_unnorm_; }
  // f at each node; sum(density .* weights) == 1.
  const Vector& density() const noexcept { return density_; }
  // Quadrature mass per node, density .* weights.
  const Vector& probs() const noexcept { return probs_; }
  // log of the quadrature normalizer of exp(log_unnorm).
  double log_normalizer() const noexcept { return log_normalizer_; }

 private:
  DoseGrid grid_;
  Vector log_unnorm_;
  Vector density_;
  Vector probs_;
  double log_normalizer_;
};

ConditionalDensity density_at(const CompositeSurface& cs, double beta, const Vector& x,
                              const DoseGrid& grid);

struct Moments {
  Vector means;
  Matrix cov;
};

// E[g_k(A) | x] and Cov[g_j(A), g_k(A) | x] for functions tabulated on the grid.
Moments conditional_moments(const ConditionalDensity& cd, std::span<const Vector> g);

// Inverse CDF with the CDF linear between nodes; u in [0, 1).
double sample_dose(const ConditionalDensity& cd, double u);

}  // namespace awl
