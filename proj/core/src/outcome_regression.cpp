#include "awl/outcome_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "awl/errors.hpp"

namespace awl {
namespace {

// Pivots below this fraction of the leading pivot count as rank deficient.
// Well above double round-off, well below 1/1e8.
constexpr double kRankThreshold = 1e-11;

}  // namespace

Matrix design_matrix(const BasisSpec& spec, std::span<const Vector> x, std::span<const double> a) {
  if (x.size() != a.size()) throw InputError("design matrix: x and a lengths differ");
  if (x.empty()) throw InputError("design matrix: no rows");
  const int p = static_cast<int>(x.front().size());
  spec.validate(p);
  Matrix d(static_cast<Eigen::Index>(x.size()), spec.dimension(p));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != p) throw InputError("design matrix: ragged covariate rows");
    d.row(static_cast<Eigen::Index>(i)) = build_design(spec, x[i], a[i]).transpose();
  }
  return d;
}

SurfaceFit fit_surface(std::span<const Vector> x, std::span<const double> a,
                       std::span<const double> response, const BasisSpec& spec) {
  if (response.size() != x.size()) throw InputError("fit_surface: response length mismatch");
  const Matrix d = design_matrix(spec, x, a);
  const int p = static_cast<int>(x.front().size());
  const Eigen::Index n = d.rows();
  const Eigen::Index k = d.cols();
  if (n <= k) {
    throw InputError("fit_surface: need more rows (" + std::to_string(n) +
                     ") than basis columns (" + std::to_string(k) + ")");
  }
  const Eigen::Map<const Vector> y(response.data(), n);
  if (!d.allFinite() || !y.allFinite()) throw NumericError("fit_surface: non-finite input");

  // Scale columns to unit norm so the rank test is insensitive to units.
  Vector scale = d.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (scale[j] == 0.0) scale[j] = 1.0;
  }
  const Matrix ds = d * scale.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Matrix> qr(ds);
  qr.setThreshold(kRankThreshold);

  const auto r_diag = qr.matrixQR().diagonal().cwiseAbs();
  const double r_max = r_diag.size() > 0 ? r_diag[0] : 0.0;
  const double r_min = r_diag.size() > 0 ? r_diag[r_diag.size() - 1] : 0.0;

  FitDiagnostics diag;
  diag.n = static_cast<int>(n);
  diag.condition_estimate = r_min > 0.0 ? r_max / r_min : std::numeric_limits<double>::infinity();
  diag.rank_ok = qr.rank() == k;

  if (!diag.rank_ok) {
    const auto names = spec.feature_names(p);
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < k; ++j) {
      if (!cols.empty()) cols += ", ";
      cols += names[static_cast<std::size_t>(perm[j])];
    }
    throw EstimationError("fit_surface: design is rank deficient (rank " +
                          std::to_string(qr.rank()) + " of " + std::to_string(k) +
                          "); collinear columns: " + cols);
  }

  Vector coeffs = qr.solve(y).cwiseQuotient(scale);
  diag.rss = (y - d * coeffs).squaredNorm();
  return {OutcomeSurface(spec, std::move(coeffs), p), diag};
}

SurfaceFit fit_surface(std::span<const Sample> samples, OutcomeColumn column,
                       const BasisSpec& spec) {
  std::vector<Vector> x;
  std::vector<double> a;
  std::vector<double> r;
  x.reserve(samples.size());
  a.reserve(samples.size());
  r.reserve(samples.size());
  for (const auto& s : samples) {
    x.push_back(s.x);
    a.push_back(s.a);
    r.push_back(column == OutcomeColumn::kY ? s.y : s.z);
  }
  return fit_surface(x, a, r, spec);
}

}  // namespace awl
