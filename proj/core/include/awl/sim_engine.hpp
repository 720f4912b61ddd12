#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "awl/inference.hpp"
#include "awl/model_core.hpp"
#include "awl/pseudo_likelihood.hpp"

namespace awl {

// Generative model for the simulation studies:
//   X_j ~ N(0, x_sd^2) iid, j = 1..p
//   Y = A (coef_y . (X, 1)) + curvature A^2 + eps_Y
//   Z = A (coef_z . (X, 1)) + curvature A^2 + eps_Z,  eps ~ N(0, noise_sd^2)
//   A | X from the assignment density at the true weight and beta0.
// coef_y and coef_z hold p slopes followed by the constant.
struct Scenario {
  enum class WeightKind { kFixed, kPatientSpecific };

  int p = 2;
  double x_sd = 0.5;
  Vector coef_y = (Vector(3) << 4.0, -2.0, 2.0).finished();
  Vector coef_z = (Vector(3) << 2.0, -4.0, -2.0).finished();
  double curvature = -2.0;
  double noise_sd = 0.5;
  double beta0 = 0.25;
  WeightKind weight_kind = WeightKind::kFixed;
  double omega0 = 0.3;
  Vector theta0;  // patient-specific: intercept then one slope per covariate
  DoseGrid grid{-6.0, 6.0, 241};
  int n = 500;
  int n_reps = 500;
  std::uint64_t master_seed = 20240601;
  int eval_size = 10000;
  int n_restarts = 3;
  double alpha = 0.05;
  double ci_level = 0.95;

  void validate() const;
  WeightShape weight_shape() const;
  Vector true_theta() const;
  CompositeSurface truth() const;
};

std::vector<Sample> generate_dataset(const Scenario& scenario, std::uint64_t seed);
std::vector<Vector> draw_covariates(const Scenario& scenario, int count, std::uint64_t seed);

inline constexpr const char* kPolicyNames[] = {"Optimal", "New", "Y-Optimizer", "Z-Optimizer",
                                               "Observed"};

struct ReplicationResult {
  int rep_index = 0;
  std::uint64_t seed = 0;
  std::optional<EstimateResult> estimate;     // empty when estimation failed
  std::optional<InferenceResult> inference;   // empty when declined or failed
  bool flagged = false;                       // excluded from estimate/error tables
  std::string status = "ok";
  std::vector<std::pair<std::string, double>> estimates;  // reported parameters
  std::vector<std::pair<std::string, double>> values;     // per policy, NaN if unavailable
  std::vector<std::pair<std::string, bool>> rejected_h0;  // per test
};

ReplicationResult run_replication(const Scenario& scenario, int rep_index);

struct EstimateRow {
  std::string parameter;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  int n_used = 0;
};

struct ErrorRow {
  std::string test;   // e.g. "beta=beta0", "beta=0"
  std::string kind;   // "type_i" or "power"
  double rate = 0.0;
  int n_used = 0;
};

struct ValueRow {
  std::string policy;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  int n_used = 0;
};

struct StudyTables {
  int n = 0;
  double beta0 = 0.0;
  std::string weight_kind;
  int n_reps = 0;
  int n_flagged = 0;
  int n_failed = 0;
  std::vector<EstimateRow> estimate_table;
  std::vector<ErrorRow> error_table;
  std::vector<ValueRow> value_table;

  const EstimateRow& estimate(const std::string& parameter) const;
  const ErrorRow& error(const std::string& test) const;
  const ValueRow& value(const std::string& policy) const;
};

// Worker count from AWL_WORKERS, else the hardware concurrency.
int default_workers();

// Replications in rep_index order; results do not depend on `workers`.
std::vector<ReplicationResult> run_replications(const Scenario& scenario, int workers);
StudyTables aggregate(const Scenario& scenario, const std::vector<ReplicationResult>& reps);
StudyTables run_study(const Scenario& scenario, int workers = default_workers());

}  // namespace awl
