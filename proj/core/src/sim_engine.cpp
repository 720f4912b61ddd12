#include "awl/sim_engine.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

#include "awl/assignment_density.hpp"
#include "awl/errors.hpp"
#include "awl/outcome_regression.hpp"
#include "awl/policy_engine.hpp"
#include "awl/rng.hpp"

namespace awl {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream indices under a replication seed.
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kEvalStream = 1;

OutcomeSurface true_surface(const Scenario& s, const Vector& coef) {
  const BasisSpec basis = BasisSpec::full_quadratic(s.p);
  Vector c = Vector::Zero(basis.dimension(s.p));
  // (1, x_1..x_p, a, a^2, a x_1..a x_p)
  c[1 + s.p] = coef[s.p];
  c[2 + s.p] = s.curvature;
  c.tail(s.p) = coef.head(s.p);
  return OutcomeSurface(basis, std::move(c), s.p);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

void Scenario::validate() const {
  if (p < 1) throw InputError("scenario: p must be positive");
  if (coef_y.size() != p + 1 || coef_z.size() != p + 1) {
    throw InputError("scenario: coef_y and coef_z need p slopes plus a constant");
  }
  if (!(x_sd > 0.0) || !(noise_sd >= 0.0)) throw InputError("scenario: invalid sd");
  if (!(beta0 > 0.0)) throw InputError("scenario: beta0 must be positive for data generation");
  if (weight_kind == WeightKind::kFixed && !(omega0 > 0.0 && omega0 < 1.0)) {
    throw InputError("scenario: omega0 must lie in (0, 1)");
  }
  if (weight_kind == WeightKind::kPatientSpecific && theta0.size() != p + 1) {
    throw InputError("scenario: theta0 needs an intercept and one slope per covariate");
  }
  if (n < 2 * BasisSpec::full_quadratic(p).dimension(p)) throw InputError("scenario: n too small");
  if (n_reps < 1) throw InputError("scenario: n_reps must be at least 1");
  if (eval_size < 1) throw InputError("scenario: eval_size must be at least 1");
  if (n_restarts < 0) throw InputError("scenario: n_restarts must be non-negative");
  if (!(alpha > 0.0 && alpha < 1.0) || !(ci_level > 0.0 && ci_level < 1.0)) {
    throw InputError("scenario: alpha and ci_level must lie in (0, 1)");
  }
}

WeightShape Scenario::weight_shape() const {
  WeightShape shape;
  if (weight_kind == WeightKind::kPatientSpecific) {
    for (int j = 0; j < p; ++j) shape.covariate_indices.push_back(j);
  }
  return shape;
}

Vector Scenario::true_theta() const {
  return weight_kind == WeightKind::kFixed ? Vector::Constant(1, logit(omega0)) : theta0;
}

CompositeSurface Scenario::truth() const {
  return CompositeSurface(true_surface(*this, coef_y), true_surface(*this, coef_z),
                          PreferenceModel(weight_shape(), true_theta()));
}

std::vector<Vector> draw_covariates(const Scenario& scenario, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> xs(static_cast<std::size_t>(count), Vector(scenario.p));
  for (auto& x : xs) {
    for (int j = 0; j < scenario.p; ++j) x[j] = rng.normal(0.0, scenario.x_sd);
  }
  return xs;
}

std::vector<Sample> generate_dataset(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const CompositeSurface truth = scenario.truth();
  Rng rng(seed);
  std::vector<Sample> data(static_cast<std::size_t>(scenario.n));
  for (auto& s : data) {
    s.x.resize(scenario.p);
    for (int j = 0; j < scenario.p; ++j) s.x[j] = rng.normal(0.0, scenario.x_sd);
    const ConditionalDensity cd = density_at(truth, scenario.beta0, s.x, scenario.grid);
    s.a = sample_dose(cd, rng.uniform());
    s.y = truth.q_y(s.x, s.a) + rng.normal(0.0, scenario.noise_sd);
    s.z = truth.q_z(s.x, s.a) + rng.normal(0.0, scenario.noise_sd);
  }
  return data;
}

ReplicationResult run_replication(const Scenario& scenario, int rep_index) {
  scenario.validate();
  ReplicationResult out;
  out.rep_index = rep_index;
  out.seed = derive_seed(scenario.master_seed, static_cast<std::uint64_t>(rep_index));

  const CompositeSurface truth = scenario.truth();
  const WeightShape shape = scenario.weight_shape();
  const Vector theta0 = scenario.true_theta();
  const bool fixed = scenario.weight_kind == Scenario::WeightKind::kFixed;
  const auto data = generate_dataset(scenario, derive_seed(out.seed, kDataStream));
  const auto eval_x = draw_covariates(scenario, scenario.eval_size, derive_seed(out.seed, kEvalStream));
  const DoseGrid& grid = scenario.grid;

  std::optional<CompositeSurface> fitted;
  try {
    const BasisSpec basis = BasisSpec::full_quadratic(scenario.p);
    auto fy = fit_surface(data, OutcomeColumn::kY, basis);
    auto fz = fit_surface(data, OutcomeColumn::kZ, basis);
    fitted.emplace(std::move(fy.surface), std::move(fz.surface),
                   PreferenceModel(shape, Vector::Zero(shape.dimension())));

    const PseudoLikelihood problem(data, fitted->q_y, fitted->q_z, shape, grid);
    FitConfig cfg;
    cfg.grid = grid;
    cfg.n_restarts = scenario.n_restarts;
    out.estimate = fit(problem, cfg);
    fitted->pref.theta = out.estimate->theta_hat;

    if (out.estimate->flags.near_singular) {
      out.flagged = true;
      out.status = "NEAR_SINGULAR";
    } else if (!out.estimate->converged) {
      out.flagged = true;
      out.status = "NOT_CONVERGED";
    } else {
      try {
        out.inference = infer(problem, *out.estimate, scenario.ci_level);
      } catch (const InferenceDeclined&) {
        out.flagged = true;
        out.status = "NEAR_SINGULAR";
      }
    }
  } catch (const EstimationError& e) {
    out.flagged = true;
    out.status = std::string("FAILED: ") + e.what();
  } catch (const NumericError& e) {
    out.flagged = true;
    out.status = std::string("FAILED: ") + e.what();
  }

  if (out.estimate) {
    const EstimateResult& est = *out.estimate;
    out.estimates.emplace_back("beta", est.beta_hat);
    if (fixed) {
      out.estimates.emplace_back("omega", expit(est.theta_hat[0]));
    } else {
      for (Eigen::Index k = 0; k < est.theta_hat.size(); ++k) {
        out.estimates.emplace_back("theta" + std::to_string(k), est.theta_hat[k]);
      }
    }
  }

  if (out.inference) {
    const EstimateResult& est = *out.estimate;
    const InferenceResult& inf = *out.inference;
    auto reject = [&](WaldTest t) { return t.p < scenario.alpha; };
    out.rejected_h0.emplace_back("beta=beta0", reject(wald(est, inf, 0, scenario.beta0)));
    if (fixed) {
      const Vector any_x = Vector::Zero(scenario.p);
      out.rejected_h0.emplace_back(
          "omega=omega0",
          reject(wald_weight(shape, est.theta_hat, inf.cov_theta(), any_x, scenario.omega0)));
    } else {
      for (Eigen::Index k = 0; k < theta0.size(); ++k) {
        out.rejected_h0.emplace_back("theta" + std::to_string(k) + "=theta0" + std::to_string(k),
                                     reject(wald(est, inf, static_cast<int>(k) + 1, theta0[k])));
      }
    }
    out.rejected_h0.emplace_back("beta=0", reject(wald(est, inf, 0, 0.0)));
  }

  auto value_of = [&](const Policy& policy) { return value_under_policy(policy, truth, eval_x); };
  out.values.emplace_back("Optimal", value_of(Policy::composite_argmax(truth, grid)));
  out.values.emplace_back(
      "New", out.estimate ? value_of(Policy::composite_argmax(*fitted, grid)) : kNaN);
  out.values.emplace_back("Y-Optimizer", fitted ? value_of(Policy::y_only(*fitted, grid)) : kNaN);
  out.values.emplace_back("Z-Optimizer", fitted ? value_of(Policy::z_only(*fitted, grid)) : kNaN);
  out.values.emplace_back("Observed", value_observed(truth, scenario.beta0, grid, eval_x));
  return out;
}

const EstimateRow& StudyTables::estimate(const std::string& parameter) const {
  for (const auto& r : estimate_table) {
    if (r.parameter == parameter) return r;
  }
  throw InputError("no estimate row for " + parameter);
}

const ErrorRow& StudyTables::error(const std::string& test) const {
  for (const auto& r : error_table) {
    if (r.test == test) return r;
  }
  throw InputError("no error row for " + test);
}

const ValueRow& StudyTables::value(const std::string& policy) const {
  for (const auto& r : value_table) {
    if (r.policy == policy) return r;
  }
  throw InputError("no value row for " + policy);
}

int default_workers() {
  if (const char* env = std::getenv("AWL_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<ReplicationResult> run_replications(const Scenario& scenario, int workers) {
  scenario.validate();
  const int n_reps = scenario.n_reps;
  std::vector<ReplicationResult> results(static_cast<std::size_t>(n_reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_reps));
  std::atomic<int> next{0};

  auto work = [&] {
    for (int r = next++; r < n_reps; r = next++) {
      try {
        results[static_cast<std::size_t>(r)] = run_replication(scenario, r);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };

  const int n_threads = std::max(1, std::min(workers, n_reps));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

StudyTables aggregate(const Scenario& scenario, const std::vector<ReplicationResult>& reps) {
  StudyTables t;
  t.n = scenario.n;
  t.beta0 = scenario.beta0;
  t.weight_kind = scenario.weight_kind == Scenario::WeightKind::kFixed ? "fixed" : "patient";
  t.n_reps = static_cast<int>(reps.size());

  std::vector<std::pair<std::string, double>> truths{{"beta", scenario.beta0}};
  if (scenario.weight_kind == Scenario::WeightKind::kFixed) {
    truths.emplace_back("omega", scenario.omega0);
  } else {
    for (Eigen::Index k = 0; k < scenario.theta0.size(); ++k) {
      truths.emplace_back("theta" + std::to_string(k), scenario.theta0[k]);
    }
  }

  std::vector<std::vector<double>> est(truths.size());
  std::vector<std::string> test_names;
  std::vector<int> rejections;
  std::vector<int> tested;
  std::vector<std::vector<double>> vals(std::size(kPolicyNames));

  for (const auto& r : reps) {
    if (r.flagged) ++t.n_flagged;
    if (!r.estimate) ++t.n_failed;
    if (!r.flagged) {
      for (std::size_t k = 0; k < truths.size() && k < r.estimates.size(); ++k) {
        est[k].push_back(r.estimates[k].second);
      }
      for (std::size_t k = 0; k < r.rejected_h0.size(); ++k) {
        if (k == test_names.size()) {
          test_names.push_back(r.rejected_h0[k].first);
          rejections.push_back(0);
          tested.push_back(0);
        }
        rejections[k] += r.rejected_h0[k].second ? 1 : 0;
        ++tested[k];
      }
    }
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      if (!std::isnan(r.values[k].second)) vals[k].push_back(r.values[k].second);
    }
  }

  for (std::size_t k = 0; k < truths.size(); ++k) {
    const double m = mean_of(est[k]);
    t.estimate_table.push_back(
        {truths[k].first, truths[k].second, m, sd_of(est[k], m), static_cast<int>(est[k].size())});
  }
  for (std::size_t k = 0; k < test_names.size(); ++k) {
    t.error_table.push_back({test_names[k], test_names[k] == "beta=0" ? "power" : "type_i",
                             static_cast<double>(rejections[k]) / tested[k], tested[k]});
  }
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const double m = mean_of(vals[k]);
    const double sd = sd_of(vals[k], m);
    const auto used = static_cast<int>(vals[k].size());
    t.value_table.push_back(
        {kPolicyNames[k], m, sd, used > 0 ? sd / std::sqrt(static_cast<double>(used)) : kNaN, used});
  }
  return t;
}

StudyTables run_study(const Scenario& scenario, int workers) {
  return aggregate(scenario, run_replications(scenario, workers));
}

}  // namespace awl
