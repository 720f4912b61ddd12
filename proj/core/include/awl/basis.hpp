#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace awl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Linear-in-coefficients basis for an outcome surface Q(x, a).
//
// Feature order is fixed:
//   [1?] [x_1 .. x_p]? a [a^2]? [a*x_j for j in interaction_indices]
// Indices are zero-based into the raw covariate vector.
struct BasisSpec {
  int degree_in_dose = 2;
  std::vector<int> interaction_indices;
  bool include_main_covariates = true;
  bool include_intercept = true;

  // Intercept, all main effects, a, a^2 and a*x_j for every covariate.
  static BasisSpec full_quadratic(int n_covariates);

  void validate(int n_covariates) const;
  int dimension(int n_covariates) const;
  std::vector<std::string> feature_names(int n_covariates) const;

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

Vector build_design(const BasisSpec& spec, const Vector& x, double a);

}  // namespace awl
