#pragma once

#include <optional>
#include <span>
#include <vector>

#include "awl/model_core.hpp"

namespace awl {

// Index of the largest value; the first (smallest dose) wins ties.
int grid_argmax(const Vector& values);

// Grid argmax of f over the grid, refined by the vertex of the parabola through
// the argmax node and its neighbours. The refined dose never leaves the cell
// pair bracketing the grid argmax.
template <class F>
double refined_argmax(F&& f, const DoseGrid& grid);

double optimal_dose(const CompositeSurface& cs, const Vector& x, const DoseGrid& grid);
double optimal_dose(const OutcomeSurface& q, const Vector& x, const DoseGrid& grid);

class Policy {
 public:
  enum class Kind { kCompositeArgmax, kYOnly, kZOnly, kFixedDose, kExternalTable };

  static Policy composite_argmax(CompositeSurface cs, DoseGrid grid);
  static Policy y_only(CompositeSurface cs, DoseGrid grid);
  static Policy z_only(CompositeSurface cs, DoseGrid grid);
  static Policy fixed_dose(double dose, DoseGrid grid);
  // doses[i] is the dose for the i-th covariate vector of the evaluated sample.
  static Policy external_table(std::vector<double> doses, DoseGrid grid);

  Kind kind() const noexcept { return kind_; }
  const DoseGrid& grid() const noexcept { return grid_; }

  double dose(const Vector& x, std::size_t index) const;

 private:
  Policy(Kind kind, std::optional<CompositeSurface> cs, DoseGrid grid);

  Kind kind_;
  std::optional<CompositeSurface> cs_;
  DoseGrid grid_;
  double fixed_ = 0.0;
  std::vector<double> table_;
};

// Mean of the true composite outcome when every x follows the policy.
double value_under_policy(const Policy& policy, const CompositeSurface& truth,
                          std::span<const Vector> x_sample);

// Mean of E[Q_theta0(x, A) | x] with A drawn from the true assignment density.
double value_observed(const CompositeSurface& truth, double beta0, const DoseGrid& grid,
                      std::span<const Vector> x_sample);

template <class F>
double refined_argmax(F&& f, const DoseGrid& grid) {
  const int m = grid.size();
  Vector v(m);
  for (int j = 0; j < m; ++j) v[j] = f(grid.point(j));
  const int j = grid_argmax(v);

  // Three nodes around the argmax; shifted inward at the ends.
  const int c = j == 0 ? 1 : (j == m - 1 ? m - 2 : j);
  const double f0 = v[c - 1];
  const double f1 = v[c];
  const double f2 = v[c + 1];
  const double curvature = f0 - 2.0 * f1 + f2;
  if (!(curvature < 0.0)) return grid.point(j);
  const double vertex = grid.point(c) + 0.5 * grid.step() * (f0 - f2) / curvature;
  const double lo = grid.point(j == 0 ? 0 : j - 1);
  const double hi = grid.point(j == m - 1 ? m - 1 : j + 1);
  return vertex < lo ? lo : (vertex > hi ? hi : vertex);
}

}  // namespace awl
