#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "awl/errors.hpp"
#include "awl/outcome_regression.hpp"
#include "awl/rng.hpp"
#include "awl/sim_engine.hpp"
#include "oracles.hpp"

namespace awl {
namespace {

Scenario fixed_scenario(int n) {
  Scenario s;
  s.n = n;
  s.grid = DoseGrid(-1.0, 1.0, 101);
  return s;
}

Scenario patient_scenario(int n) {
  Scenario s = fixed_scenario(n);
  s.weight_kind = Scenario::WeightKind::kPatientSpecific;
  s.theta0 = (Vector(3) << 0.0, -2.0, 2.0).finished();
  s.beta0 = 0.6;
  return s;
}

TEST(Seeds, DeriveSeedIsStableAndSpread) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 20; ++m)
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(m, i));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Rng, UniformRange) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Scenario, Validation) {
  Scenario s = fixed_scenario(500);
  EXPECT_NO_THROW(s.validate());
  s.beta0 = 0.0;
  EXPECT_THROW(s.validate(), InputError);
  s = fixed_scenario(500);
  s.omega0 = 1.0;
  EXPECT_THROW(s.validate(), InputError);
  s = patient_scenario(500);
  s.theta0 = Vector::Zero(2);
  EXPECT_THROW(s.validate(), InputError);
  s = fixed_scenario(500);
  s.n_reps = 0;
  EXPECT_THROW(s.validate(), InputError);
}

TEST(GenerateDataset, CovariateSpread) {
  const auto data = generate_dataset(fixed_scenario(100000), 1);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> col;
    for (const auto& s : data) col.push_back(s.x[j]);
    const double sd = testing::sd(col);
    EXPECT_GE(sd, 0.495);
    EXPECT_LE(sd, 0.505);
  }
}

TEST(GenerateDataset, Deterministic) {
  const auto a = generate_dataset(fixed_scenario(100), 9);
  const auto b = generate_dataset(fixed_scenario(100), 9);
  const auto c = generate_dataset(fixed_scenario(100), 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].a, b[i].a);
    EXPECT_EQ(a[i].y, b[i].y);
  }
  EXPECT_NE(a[0].a, c[0].a);
}

TEST(GenerateDataset, OutcomeRegressionRecoversGenerativeCoefficients) {
  const int n = 100000;
  const auto data = generate_dataset(fixed_scenario(n), 20240601);
  const auto spec = BasisSpec::full_quadratic(2);
  std::vector<Vector> x;
  std::vector<double> a, y, z;
  for (const auto& s : data) {
    x.push_back(s.x);
    a.push_back(s.a);
    y.push_back(s.y);
    z.push_back(s.z);
  }
  const Matrix d = design_matrix(spec, x, a);
  const Matrix xtx_inv = (d.transpose() * d).inverse();
  const Vector truth_y = (Vector(7) << 0, 0, 0, 2, -2, 4, -2).finished();
  const Vector truth_z = (Vector(7) << 0, 0, 0, -2, -2, 2, -4).finished();
  for (auto [resp, truth] : {std::pair{&y, truth_y}, std::pair{&z, truth_z}}) {
    const auto fit = fit_surface(x, a, *resp, spec);
    const double sigma2 = fit.diagnostics.rss / (n - 7);
    for (int k = 0; k < 7; ++k) {
      const double se = std::sqrt(sigma2 * xtx_inv(k, k));
      EXPECT_LT(std::abs(fit.surface.coeffs()[k] - truth[k]), 3 * se) << "coefficient " << k;
    }
  }
}

TEST(GenerateDataset, ConditionalDoseDistribution) {
  // Under omega0 = 0.3 the composite is c(x) a - 2 a^2 with c = 2.6 x1 - 3.4 x2 - 0.8,
  // so A | x is a normal with mean c/4 and sd 1/(2 sqrt(beta0)) truncated to [-1, 1].
  Scenario s = fixed_scenario(100000);
  const auto data = generate_dataset(s, 3);
  const int n_xbins = 4, n_ubins = 10;
  std::vector<std::vector<int>> counts(n_xbins, std::vector<int>(n_ubins, 0));
  for (const auto& smp : data) {
    const double c = 2.6 * smp.x[0] - 3.4 * smp.x[1] - 0.8;
    const int xb = c < -1.8 ? 0 : (c < -0.8 ? 1 : (c < 0.2 ? 2 : 3));
    const double u = testing::quadratic_assignment(c, s.beta0, -1.0, 1.0).cdf(smp.a);
    ++counts[xb][std::min(n_ubins - 1, static_cast<int>(u * n_ubins))];
  }
  for (int b = 0; b < n_xbins; ++b) {
    int total = 0;
    for (int c : counts[b]) total += c;
    const double expected = static_cast<double>(total) / n_ubins;
    double chi2 = 0.0;
    for (int c : counts[b]) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_GT(testing::chi_square_upper(chi2, n_ubins - 1), 0.01) << "bin " << b;
  }
}

TEST(RunReplication, SanityEnvelope) {
  Scenario s = fixed_scenario(500);
  s.eval_size = 2000;
  for (int r = 0; r < 3; ++r) {
    const auto rep = run_replication(s, r);
    ASSERT_TRUE(rep.estimate.has_value());
    EXPECT_GT(rep.estimate->beta_hat, 0.0);
    const double omega = expit(rep.estimate->theta_hat[0]);
    EXPECT_GT(omega, 0.0);
    EXPECT_LT(omega, 1.0);
    EXPECT_FALSE(rep.flagged);
    EXPECT_EQ(rep.values.size(), 5u);
    for (const auto& [name, v] : rep.values) EXPECT_TRUE(std::isfinite(v)) << name;
    EXPECT_EQ(rep.seed, derive_seed(s.master_seed, r));
  }
}

TEST(RunReplication, PatientSpecificParameters) {
  Scenario s = patient_scenario(400);
  s.eval_size = 500;
  const auto rep = run_replication(s, 0);
  ASSERT_EQ(rep.estimates.size(), 4u);
  EXPECT_EQ(rep.estimates[1].first, "theta0");
  ASSERT_EQ(rep.rejected_h0.size(), 5u);
  EXPECT_EQ(rep.rejected_h0.back().first, "beta=0");
}

TEST(RunStudy, SingleReplicationIdentity) {
  Scenario s = fixed_scenario(300);
  s.n_reps = 1;
  s.eval_size = 1000;
  const auto rep = run_replication(s, 0);
  const auto tables = run_study(s, 1);
  EXPECT_EQ(tables.estimate("beta").mean, rep.estimate->beta_hat);
  EXPECT_EQ(tables.estimate("omega").mean, expit(rep.estimate->theta_hat[0]));
  EXPECT_EQ(tables.estimate("beta").sd, 0.0);
  for (const auto& [name, v] : rep.values) EXPECT_EQ(tables.value(name).mean, v);
  for (const auto& [name, rejected] : rep.rejected_h0)
    EXPECT_EQ(tables.error(name).rate, rejected ? 1.0 : 0.0);
}

TEST(RunStudy, IndependentOfWorkerCount) {
  Scenario s = patient_scenario(200);
  s.n_reps = 6;
  s.eval_size = 500;
  const auto one = run_replications(s, 1);
  const auto three = run_replications(s, 3);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t r = 0; r < one.size(); ++r) {
    EXPECT_EQ(one[r].estimates, three[r].estimates);
    EXPECT_EQ(one[r].values, three[r].values);
    EXPECT_EQ(one[r].rejected_h0, three[r].rejected_h0);
  }
}

TEST(Aggregate, FlaggedExcludedFromEstimatesKeptInValues) {
  Scenario s = fixed_scenario(100);
  std::vector<ReplicationResult> reps(3);
  for (int r = 0; r < 3; ++r) {
    reps[r].rep_index = r;
    reps[r].estimate = EstimateResult{};
    reps[r].estimates = {{"beta", 0.1 * (r + 1)}, {"omega", 0.3}};
    reps[r].rejected_h0 = {{"beta=beta0", r == 0}, {"omega=omega0", false}, {"beta=0", true}};
    for (const char* name : kPolicyNames) reps[r].values.emplace_back(name, 1.0 * r);
  }
  reps[2].flagged = true;
  const auto t = aggregate(s, reps);
  EXPECT_EQ(t.n_flagged, 1);
  EXPECT_EQ(t.estimate("beta").n_used, 2);
  EXPECT_NEAR(t.estimate("beta").mean, 0.15, 1e-15);
  EXPECT_EQ(t.error("beta=beta0").rate, 0.5);
  EXPECT_EQ(t.error("beta=0").kind, "power");
  EXPECT_EQ(t.value("Observed").n_used, 3);
  EXPECT_DOUBLE_EQ(t.value("Observed").mean, 1.0);
}

}  // namespace
}  // namespace awl
