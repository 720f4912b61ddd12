#pragma once

#include <span>
#include <vector>

#include "awl/model_core.hpp"

namespace awl {

struct FitDiagnostics {
  double rss = 0.0;
  int n = 0;
  double condition_estimate = 0.0;
  bool rank_ok = false;
};

struct SurfaceFit {
  OutcomeSurface surface;
  FitDiagnostics diagnostics;
};

enum class OutcomeColumn { kY, kZ };

// Least squares through a column-pivoted Householder QR of the design matrix.
// Throws EstimationError naming the collinear columns when the design is rank
// deficient, and InputError when n does not exceed the basis dimension.
SurfaceFit fit_surface(std::span<const Vector> x, std::span<const double> a,
                       std::span<const double> response, const BasisSpec& spec);

SurfaceFit fit_surface(std::span<const Sample> samples, OutcomeColumn column,
                       const BasisSpec& spec);

Matrix design_matrix(const BasisSpec& spec, std::span<const Vector> x, std::span<const double> a);

}  // namespace awl
