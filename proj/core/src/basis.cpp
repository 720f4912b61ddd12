#include "awl/basis.hpp"

#include <algorithm>

#include "awl/errors.hpp"

namespace awl {

BasisSpec BasisSpec::full_quadratic(int n_covariates) {
  BasisSpec spec;
  spec.interaction_indices.resize(static_cast<std::size_t>(n_covariates));
  for (int j = 0; j < n_covariates; ++j) spec.interaction_indices[static_cast<std::size_t>(j)] = j;
  return spec;
}

void BasisSpec::validate(int n_covariates) const {
  if (degree_in_dose != 1 && degree_in_dose != 2) {
    throw InputError("basis: degree_in_dose must be 1 or 2, got " +
                     std::to_string(degree_in_dose));
  }
  for (int j : interaction_indices) {
    if (j < 0 || j >= n_covariates) {
      throw InputError("basis: interaction index " + std::to_string(j) +
                       " out of range for " + std::to_string(n_covariates) + " covariates");
    }
  }
  auto sorted = interaction_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InputError("basis: duplicate interaction index");
  }
}

int BasisSpec::dimension(int n_covariates) const {
  return (include_intercept ? 1 : 0) + (include_main_covariates ? n_covariates : 0) + 1 +
         (degree_in_dose == 2 ? 1 : 0) + static_cast<int>(interaction_indices.size());
}

std::vector<std::string> BasisSpec::feature_names(int n_covariates) const {
  std::vector<std::string> names;
  if (include_intercept) names.emplace_back("1");
  if (include_main_covariates) {
    for (int j = 0; j < n_covariates; ++j) names.push_back("x" + std::to_string(j + 1));
  }
  names.emplace_back("a");
  if (degree_in_dose == 2) names.emplace_back("a^2");
  for (int j : interaction_indices) names.push_back("a*x" + std::to_string(j + 1));
  return names;
}

Vector build_design(const BasisSpec& spec, const Vector& x, double a) {
  const int p = static_cast<int>(x.size());
  spec.validate(p);
  Vector row(spec.dimension(p));
  Eigen::Index k = 0;
  if (spec.include_intercept) row[k++] = 1.0;
  if (spec.include_main_covariates) {
    row.segment(k, p) = x;
    k += p;
  }
  row[k++] = a;
  if (spec.degree_in_dose == 2) row[k++] = a * a;
  for (int j : spec.interaction_indices) row[k++] = a * x[j];
  return row;
}

}  // namespace awl
