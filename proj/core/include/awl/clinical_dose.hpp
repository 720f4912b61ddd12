#pragma once

namespace awl::clinical {

// Fractionated radiation plan. ratio is the lesion-to-liver dose ratio.
struct FractionPlan {
  int n_fractions = 1;
  double dose_per_fraction = 0.0;  // Gy
  double ratio = 1.0;

  void validate() const;
};

double total_dose(const FractionPlan& plan);

// Mean liver dose:
// total * ratio * (d * ratio + 2.5) / (2 + 2.5)
double mld(const FractionPlan& plan);

// Biologically effective dose: total * (d / 10 + 1)
double bed(const FractionPlan& plan);

// 1 - p_tox * w - p_lp * (1 - w); all arguments in [0, 1].
double utility_score(double p_tox, double p_lp, double w);

}  // namespace awl::clinical
