#include "awl/policy_engine.hpp"

#include "awl/assignment_density.hpp"
#include "awl/errors.hpp"

namespace awl {

int grid_argmax(const Vector& values) {
  if (values.size() == 0) throw InputError("grid_argmax: empty");
  int best = 0;
  for (int j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

double optimal_dose(const CompositeSurface& cs, const Vector& x, const DoseGrid& grid) {
  return refined_argmax(cs.in_dose(x), grid);
}

double optimal_dose(const OutcomeSurface& q, const Vector& x, const DoseGrid& grid) {
  return refined_argmax(q.in_dose(x), grid);
}

Policy::Policy(Kind kind, std::optional<CompositeSurface> cs, DoseGrid grid)
    : kind_(kind), cs_(std::move(cs)), grid_(std::move(grid)) {}

Policy Policy::composite_argmax(CompositeSurface cs, DoseGrid grid) {
  return Policy(Kind::kCompositeArgmax, std::move(cs), std::move(grid));
}

Policy Policy::y_only(CompositeSurface cs, DoseGrid grid) {
  return Policy(Kind::kYOnly, std::move(cs), std::move(grid));
}

Policy Policy::z_only(CompositeSurface cs, DoseGrid grid) {
  return Policy(Kind::kZOnly, std::move(cs), std::move(grid));
}

Policy Policy::fixed_dose(double dose, DoseGrid grid) {
  if (!grid.contains(dose)) throw InputError("fixed-dose policy: dose outside the grid interval");
  Policy p(Kind::kFixedDose, std::nullopt, std::move(grid));
  p.fixed_ = dose;
  return p;
}

Policy Policy::external_table(std::vector<double> doses, DoseGrid grid) {
  for (double d : doses) {
    if (!grid.contains(d)) throw InputError("external policy: dose outside the grid interval");
  }
  Policy p(Kind::kExternalTable, std::nullopt, std::move(grid));
  p.table_ = std::move(doses);
  return p;
}

double Policy::dose(const Vector& x, std::size_t index) const {
  switch (kind_) {
    case Kind::kCompositeArgmax:
      return optimal_dose(*cs_, x, grid_);
    case Kind::kYOnly:
      return optimal_dose(cs_->q_y, x, grid_);
    case Kind::kZOnly:
      return optimal_dose(cs_->q_z, x, grid_);
    case Kind::kFixedDose:
      return fixed_;
    case Kind::kExternalTable:
      if (index >= table_.size()) throw InputError("external policy: no dose for this index");
      return table_[index];
  }
  return fixed_;
}

double value_under_policy(const Policy& policy, const CompositeSurface& truth,
                          std::span<const Vector> x_sample) {
  if (x_sample.empty()) throw InputError("value_under_policy: empty covariate sample");
  double total = 0.0;
  for (std::size_t i = 0; i < x_sample.size(); ++i) {
    const Vector& x = x_sample[i];
    total += truth.in_dose(x)(policy.dose(x, i));
  }
  return total / static_cast<double>(x_sample.size());
}

double value_observed(const CompositeSurface& truth, double beta0, const DoseGrid& grid,
                      std::span<const Vector> x_sample) {
  if (x_sample.empty()) throw InputError("value_observed: empty covariate sample");
  double total = 0.0;
  Vector q(grid.size());
  for (const Vector& x : x_sample) {
    const DosePolynomial poly = truth.in_dose(x);
    for (int j = 0; j < grid.size(); ++j) q[j] = poly(grid.point(j));
    const ConditionalDensity cd(grid, beta0 * q);
    total += cd.probs().dot(q);
  }
  return total / static_cast<double>(x_sample.size());
}

}  // namespace awl
