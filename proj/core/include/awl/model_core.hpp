#pragma once

#include <memory>
#include <vector>

#include "awl/basis.hpp"

namespace awl {

// One observation: covariates, assigned dose, two outcomes (higher is better).
struct Sample {
  Vector x;
  double a = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Bounded dose interval discretized into m equally spaced nodes.
//
// Lebesgue grids integrate with the trapezoid rule; counting grids give every
// node unit weight, which turns the normalizer into a plain sum over
// categorical doses. Copies share the node arrays.
class DoseGrid {
 public:
  enum class Measure { kLebesgue, kCounting };

  DoseGrid(double a_min, double a_max, int m, Measure measure = Measure::kLebesgue);

  double a_min() const noexcept { return a_min_; }
  double a_max() const noexcept { return a_max_; }
  int size() const noexcept { return m_; }
  double step() const noexcept { return step_; }
  Measure measure() const noexcept { return measure_; }

  const Vector& points() const noexcept { return nodes_->points; }
  const Vector& weights() const noexcept { return nodes_->weights; }
  double point(int j) const { return nodes_->points[j]; }

  bool contains(double a) const noexcept;

  friend bool operator==(const DoseGrid& l, const DoseGrid& r) noexcept {
    return l.a_min_ == r.a_min_ && l.a_max_ == r.a_max_ && l.m_ == r.m_ &&
           l.measure_ == r.measure_;
  }

 private:
  struct Nodes {
    Vector points;
    Vector weights;
  };

  double a_min_;
  double a_max_;
  int m_;
  double step_;
  Measure measure_;
  std::shared_ptr<const Nodes> nodes_;
};

// Covariates entering the weight model, selected from the raw x by index.
// The weight design always carries a leading intercept.
struct WeightShape {
  std::vector<int> covariate_indices;

  int dimension() const noexcept { return 1 + static_cast<int>(covariate_indices.size()); }
  void validate(int n_covariates) const;
  Vector design(const Vector& x) const;

  friend bool operator==(const WeightShape&, const WeightShape&) = default;
};

// w(x; theta) = expit(x_w' theta).
struct PreferenceModel {
  WeightShape shape;
  Vector theta;

  PreferenceModel() : theta(Vector::Zero(1)) {}
  PreferenceModel(WeightShape s, Vector t);

  // Intercept-only model with constant weight omega.
  static PreferenceModel fixed(double omega);
};

double expit(double u) noexcept;
double logit(double p);

double weight(const PreferenceModel& pref, const Vector& x);
// dw/dtheta = w (1 - w) x_w
Vector weight_grad(const PreferenceModel& pref, const Vector& x);
// d2w/dtheta2 = w (1 - w) (1 - 2w) x_w x_w'
Matrix weight_hessian(const PreferenceModel& pref, const Vector& x);

// Q(x, a) restricted to a fixed x: c0 + c1 a + c2 a^2.
struct DosePolynomial {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double a) const noexcept { return c0 + a * (c1 + a * c2); }
};

// Fitted (or true) conditional mean surface, linear in basis coefficients.
class OutcomeSurface {
 public:
  OutcomeSurface(BasisSpec basis, Vector coeffs, int n_covariates);

  const BasisSpec& basis() const noexcept { return basis_; }
  const Vector& coeffs() const noexcept { return coeffs_; }
  int n_covariates() const noexcept { return n_covariates_; }

  double operator()(const Vector& x, double a) const;
  DosePolynomial in_dose(const Vector& x) const;
  // Values at every grid node, written to out (size grid.size()).
  void eval_on_grid(const Vector& x, const DoseGrid& grid, Eigen::Ref<Vector> out) const;

  // Returns s * Q + k, with k constant in (x, a). Requires an intercept for k != 0.
  OutcomeSurface affine(double scale, double shift) const;

 private:
  void check_x(const Vector& x) const;

  BasisSpec basis_;
  Vector coeffs_;
  int n_covariates_;
};

// Q_theta = w Q_Y + (1 - w) Q_Z, and the contrast R = Q_Y - Q_Z.
struct CompositeSurface {
  OutcomeSurface q_y;
  OutcomeSurface q_z;
  PreferenceModel pref;

  CompositeSurface(OutcomeSurface y, OutcomeSurface z, PreferenceModel p);

  DosePolynomial in_dose(const Vector& x) const;
};

double composite_eval(const CompositeSurface& cs, const Vector& x, double a);
double contrast_eval(const CompositeSurface& cs, const Vector& x, double a);

}  // namespace awl
