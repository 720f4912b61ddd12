#include "awl/assignment_density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "awl/errors.hpp"

namespace awl {

ConditionalDensity::ConditionalDensity(DoseGrid grid, Vector log_unnorm)
    : grid_(std::move(grid)), log_unnorm_(std::move(log_unnorm)) {
  if (log_unnorm_.size() != grid_.size()) {
    throw InputError("conditional density: log weights do not match the grid");
  }
  if (!log_unnorm_.allFinite()) throw NumericError("conditional density: non-finite exponent");
  const double shift = log_unnorm_.maxCoeff();
  density_ = (log_unnorm_.array() - shift).exp().matrix();
  const double total = density_.dot(grid_.weights());
  density_ /= total;
  probs_ = density_.cwiseProduct(grid_.weights());
  log_normalizer_ = shift + std::log(total);
}

ConditionalDensity density_at(const CompositeSurface& cs, double beta, const Vector& x,
                              const DoseGrid& grid) {
  if (!std::isfinite(beta)) throw NumericError("density_at: beta must be finite");
  const DosePolynomial q = cs.in_dose(x);
  const Vector& t = grid.points();
  Vector l(grid.size());
  for (Eigen::Index j = 0; j < l.size(); ++j) l[j] = beta * q(t[j]);
  return ConditionalDensity(grid, std::move(l));
}

Moments conditional_moments(const ConditionalDensity& cd, std::span<const Vector> g) {
  const auto k = static_cast<Eigen::Index>(g.size());
  const Vector& p = cd.probs();
  Moments out{Vector(k), Matrix(k, k)};
  Matrix centered(p.size(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Vector& gc = g[static_cast<std::size_t>(c)];
    if (gc.size() != p.size()) {
      throw InputError("conditional_moments: function " + std::to_string(c) +
                       " is not tabulated on the density grid");
    }
    out.means[c] = p.dot(gc);
    centered.col(c) = gc.array() - out.means[c];
  }
  out.cov = centered.transpose() * p.asDiagonal() * centered;
  return out;
}

double sample_dose(const ConditionalDensity& cd, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw InputError("sample_dose: u must lie in [0, 1)");
  const DoseGrid& grid = cd.grid();
  const Vector& f = cd.density();
  const int m = grid.size();

  if (grid.measure() == DoseGrid::Measure::kCounting) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += cd.probs()[j];
      if (u < acc) return grid.point(j);
    }
    return grid.point(m - 1);
  }

  // Trapezoid mass of each cell; cell masses sum to one.
  const double h = grid.step();
  double cdf = 0.0;
  for (int j = 0; j + 1 < m; ++j) {
    const double mass = 0.5 * h * (f[j] + f[j + 1]);
    if (u < cdf + mass || j + 2 == m) {
      if (mass <= 0.0) return grid.point(j);
      const double frac = std::clamp((u - cdf) / mass, 0.0, 1.0);
      return grid.point(j) + frac * (grid.point(j + 1) - grid.point(j));
    }
    cdf += mass;
  }
  return grid.a_max();
}

}  // namespace awl
