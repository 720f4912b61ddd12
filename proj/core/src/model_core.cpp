#include "awl/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "awl/errors.hpp"

namespace awl {

DoseGrid::DoseGrid(double a_min, double a_max, int m, Measure measure)
    : a_min_(a_min), a_max_(a_max), m_(m), step_(0.0), measure_(measure) {
  if (!std::isfinite(a_min) || !std::isfinite(a_max) || !(a_min < a_max)) {
    throw InputError("dose grid: need finite a_min < a_max");
  }
  if (m < 3) throw InputError("dose grid: need at least 3 points, got " + std::to_string(m));
  step_ = (a_max - a_min) / (m - 1);

  auto nodes = std::make_shared<Nodes>();
  nodes->points.resize(m);
  for (int j = 0; j < m; ++j) nodes->points[j] = a_min + j * step_;
  nodes->points[m - 1] = a_max;
  if (measure == Measure::kLebesgue) {
    nodes->weights = Vector::Constant(m, step_);
    nodes->weights[0] = nodes->weights[m - 1] = 0.5 * step_;
  } else {
    nodes->weights = Vector::Ones(m);
  }
  nodes_ = std::move(nodes);
}

bool DoseGrid::contains(double a) const noexcept {
  const double slack = 1e-12 * (a_max_ - a_min_);
  return a >= a_min_ - slack && a <= a_max_ + slack;
}

void WeightShape::validate(int n_covariates) const {
  for (std::size_t k = 0; k < covariate_indices.size(); ++k) {
    const int j = covariate_indices[k];
    if (j < 0 || j >= n_covariates) {
      throw InputError("weight covariate index " + std::to_string(j) + " out of range for " +
                       std::to_string(n_covariates) + " covariates");
    }
    for (std::size_t l = 0; l < k; ++l) {
      if (covariate_indices[l] == j) throw InputError("duplicate weight covariate index");
    }
  }
}

Vector WeightShape::design(const Vector& x) const {
  Vector xw(dimension());
  xw[0] = 1.0;
  for (std::size_t k = 0; k < covariate_indices.size(); ++k) {
    const int j = covariate_indices[k];
    if (j < 0 || j >= x.size()) {
      throw InputError("weight covariate index " + std::to_string(j) + " out of range for " +
                       std::to_string(x.size()) + " covariates");
    }
    xw[static_cast<Eigen::Index>(k) + 1] = x[j];
  }
  return xw;
}

PreferenceModel::PreferenceModel(WeightShape s, Vector t) : shape(std::move(s)), theta(std::move(t)) {
  if (theta.size() != shape.dimension()) {
    throw InputError("preference model: theta has length " + std::to_string(theta.size()) +
                     ", weight design has " + std::to_string(shape.dimension()));
  }
  if (!theta.allFinite()) throw InputError("preference model: theta must be finite");
}

PreferenceModel PreferenceModel::fixed(double omega) {
  return PreferenceModel(WeightShape{}, Vector::Constant(1, logit(omega)));
}

double expit(double u) noexcept {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("logit: argument must lie in (0, 1)");
  return std::log(p / (1.0 - p));
}

double weight(const PreferenceModel& pref, const Vector& x) {
  return expit(pref.shape.design(x).dot(pref.theta));
}

Vector weight_grad(const PreferenceModel& pref, const Vector& x) {
  const Vector xw = pref.shape.design(x);
  const double w = expit(xw.dot(pref.theta));
  return w * (1.0 - w) * xw;
}

Matrix weight_hessian(const PreferenceModel& pref, const Vector& x) {
  const Vector xw = pref.shape.design(x);
  const double w = expit(xw.dot(pref.theta));
  return w * (1.0 - w) * (1.0 - 2.0 * w) * (xw * xw.transpose());
}

OutcomeSurface::OutcomeSurface(BasisSpec basis, Vector coeffs, int n_covariates)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)), n_covariates_(n_covariates) {
  basis_.validate(n_covariates_);
  if (coeffs_.size() != basis_.dimension(n_covariates_)) {
    throw InputError("outcome surface: " + std::to_string(coeffs_.size()) +
                     " coefficients for a basis of dimension " +
                     std::to_string(basis_.dimension(n_covariates_)));
  }
  if (!coeffs_.allFinite()) throw NumericError("outcome surface: non-finite coefficient");
}

void OutcomeSurface::check_x(const Vector& x) const {
  if (x.size() != n_covariates_) {
    throw InputError("outcome surface: expected " + std::to_string(n_covariates_) +
                     " covariates, got " + std::to_string(x.size()));
  }
}

DosePolynomial OutcomeSurface::in_dose(const Vector& x) const {
  check_x(x);
  DosePolynomial poly;
  Eigen::Index k = 0;
  if (basis_.include_intercept) poly.c0 += coeffs_[k++];
  if (basis_.include_main_covariates) {
    poly.c0 += coeffs_.segment(k, n_covariates_).dot(x);
    k += n_covariates_;
  }
  poly.c1 = coeffs_[k++];
  if (basis_.degree_in_dose == 2) poly.c2 = coeffs_[k++];
  for (int j : basis_.interaction_indices) poly.c1 += coeffs_[k++] * x[j];
  return poly;
}

double OutcomeSurface::operator()(const Vector& x, double a) const { return in_dose(x)(a); }

void OutcomeSurface::eval_on_grid(const Vector& x, const DoseGrid& grid,
                                  Eigen::Ref<Vector> out) const {
  const DosePolynomial poly = in_dose(x);
  const Vector& t = grid.points();
  for (Eigen::Index j = 0; j < t.size(); ++j) out[j] = poly(t[j]);
}

OutcomeSurface OutcomeSurface::affine(double scale, double shift) const {
  Vector c = scale * coeffs_;
  if (shift != 0.0) {
    if (!basis_.include_intercept) throw InputError("affine shift needs an intercept column");
    c[0] += shift;
  }
  return OutcomeSurface(basis_, std::move(c), n_covariates_);
}

CompositeSurface::CompositeSurface(OutcomeSurface y, OutcomeSurface z, PreferenceModel p)
    : q_y(std::move(y)), q_z(std::move(z)), pref(std::move(p)) {
  if (q_y.n_covariates() != q_z.n_covariates()) {
    throw InputError("composite surface: Q_Y and Q_Z disagree on covariate count");
  }
  pref.shape.validate(q_y.n_covariates());
}

DosePolynomial CompositeSurface::in_dose(const Vector& x) const {
  const double w = weight(pref, x);
  const DosePolynomial y = q_y.in_dose(x);
  const DosePolynomial z = q_z.in_dose(x);
  return {z.c0 + w * (y.c0 - z.c0), z.c1 + w * (y.c1 - z.c1), z.c2 + w * (y.c2 - z.c2)};
}

double composite_eval(const CompositeSurface& cs, const Vector& x, double a) {
  const double w = weight(cs.pref, x);
  return w * cs.q_y(x, a) + (1.0 - w) * cs.q_z(x, a);
}

double contrast_eval(const CompositeSurface& cs, const Vector& x, double a) {
  return cs.q_y(x, a) - cs.q_z(x, a);
}

}  // namespace awl
