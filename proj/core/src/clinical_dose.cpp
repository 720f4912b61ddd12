#include "awl/clinical_dose.hpp"

#include <cmath>

#include "awl/errors.hpp"

namespace awl::clinical {
namespace {

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void FractionPlan::validate() const {
  if (n_fractions < 1) throw InputError("fraction plan: need at least one fraction");
  if (!(dose_per_fraction > 0.0) || !std::isfinite(dose_per_fraction)) {
    throw InputError("fraction plan: dose per fraction must be positive");
  }
  if (!unit(ratio)) throw InputError("fraction plan: ratio must lie in [0, 1]");
}

double total_dose(const FractionPlan& plan) {
  plan.validate();
  return plan.n_fractions * plan.dose_per_fraction;
}

double mld(const FractionPlan& plan) {
  constexpr double kAlphaBeta = 2.5;
  return total_dose(plan) * plan.ratio * (plan.dose_per_fraction * plan.ratio + kAlphaBeta) /
         (2.0 + kAlphaBeta);
}

double bed(const FractionPlan& plan) {
  constexpr double kAlphaBeta = 10.0;
  return total_dose(plan) * (plan.dose_per_fraction / kAlphaBeta + 1.0);
}

double utility_score(double p_tox, double p_lp, double w) {
  if (!unit(p_tox) || !unit(p_lp) || !unit(w)) {
    throw InputError("utility_score: probabilities and weight must lie in [0, 1]");
  }
  return 1.0 - p_tox * w - p_lp * (1.0 - w);
}

}  // namespace awl::clinical
