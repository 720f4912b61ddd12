#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "awl/errors.hpp"
#include "awl/inference.hpp"
#include "awl/io.hpp"
#include "awl/outcome_regression.hpp"
#include "awl/policy_engine.hpp"
#include "awl/pseudo_likelihood.hpp"
#include "awl/rng.hpp"
#include "awl/sim_engine.hpp"

namespace awl::cli {
namespace {

struct Failure {
  ExitCode code;
  std::string kind;
  std::string reason;
};

std::vector<int> parse_index_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v - 1);
    } catch (const std::exception&) {
      throw InputError(flag + ": expected a comma-separated list of 1-based indices, got '" + text + "'");
    }
  }
  return out;
}

DoseGrid parse_grid(const std::string& text) {
  std::stringstream ss(text);
  std::string a, b, m;
  if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, m, ',') ||
      ss.rdbuf()->in_avail() > 0) {
    throw InputError("--grid: expected a_min,a_max,m");
  }
  try {
    return DoseGrid(std::stod(a), std::stod(b), std::stoi(m));
  } catch (const InputError&) {
    throw;
  } catch (const std::exception&) {
    throw InputError("--grid: expected a_min,a_max,m");
  }
}

struct FitOptions {
  std::string data;
  std::string out;
  std::string weight_covs;
  std::string grid;
  std::string interactions = "all";
  int dose_degree = 2;
  bool no_main_effects = false;
  bool no_intercept = false;
  int restarts = 3;
  std::uint64_t seed = 0x5eed;
  int grid_points = 201;
};

struct InferOptions {
  std::string estimate;
  std::string data;
  std::string out;
  double level = 0.95;
};

struct PolicyOptions {
  std::string estimate;
  std::string covariates;
  std::string out;
};

struct SimulateOptions {
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  int workers = 0;
};

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const auto data = io::read_samples_file(o.data);
  const int p = static_cast<int>(data.front().x.size());

  BasisSpec basis;
  basis.degree_in_dose = o.dose_degree;
  basis.include_main_covariates = !o.no_main_effects;
  basis.include_intercept = !o.no_intercept;
  if (o.interactions == "all") {
    basis.interaction_indices = BasisSpec::full_quadratic(p).interaction_indices;
  } else if (o.interactions != "none") {
    basis.interaction_indices = parse_index_list(o.interactions, "--interactions");
  }
  basis.validate(p);

  WeightShape shape{parse_index_list(o.weight_covs, "--weight-covs")};
  shape.validate(p);

  std::optional<DoseGrid> grid;
  if (!o.grid.empty()) {
    grid = parse_grid(o.grid);
  } else {
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end(),
                                              [](const Sample& l, const Sample& r) { return l.a < r.a; });
    grid.emplace(lo->a, hi->a, o.grid_points);
  }

  auto fy = fit_surface(data, OutcomeColumn::kY, basis);
  auto fz = fit_surface(data, OutcomeColumn::kZ, basis);
  const PseudoLikelihood problem(data, fy.surface, fz.surface, shape, *grid);
  FitConfig cfg;
  cfg.grid = *grid;
  cfg.n_restarts = o.restarts;
  cfg.jitter_seed = o.seed;
  EstimateResult est = fit(problem, cfg);

  io::EstimateFile file{
      .n = static_cast<int>(data.size()),
      .p = p,
      .grid = *grid,
      .q_y = fy.surface,
      .q_z = fz.surface,
      .shape = shape,
      .estimate = est,
      .covariance = std::nullopt,
      .inference = std::nullopt,
  };
  if (!est.flags.near_singular) {
    try {
      file.covariance = infer(problem, est).cov_hat;
    } catch (const InferenceDeclined&) {
      file.estimate.flags.near_singular = true;
    }
  }
  io::write_text(o.out, io::estimate_to_json(file));
  out << "beta=" << est.beta_hat << " theta=" << est.theta_hat.transpose()
      << " converged=" << (est.converged ? "true" : "false") << '\n';
  if (file.estimate.flags.near_singular) {
    err << "awl: error kind=declined reason=\"NEAR_SINGULAR: preference weight is not identified "
           "(Hessian condition "
        << est.hessian_condition << ")\"\n";
    return kDeclined;
  }
  return kOk;
}

int cmd_infer(const InferOptions& o, std::ostream& out, std::ostream&) {
  io::EstimateFile file = io::estimate_from_json(io::read_text(o.estimate));
  const auto data = io::read_samples_file(o.data);
  const PseudoLikelihood problem(data, file.q_y, file.q_z, file.shape, file.grid);
  InferenceResult inf = infer(problem, file.estimate, o.level);
  file.covariance = inf.cov_hat;
  file.inference = std::move(inf);
  io::write_text(o.out, io::estimate_to_json(file));
  out << "se=" << file.inference->se.transpose() << '\n';
  return kOk;
}

int cmd_policy(const PolicyOptions& o, std::ostream& out, std::ostream&) {
  const io::EstimateFile file = io::estimate_from_json(io::read_text(o.estimate));
  const auto xs = io::read_covariates_file(o.covariates);
  const CompositeSurface cs = file.composite();
  std::ofstream os(o.out, std::ios::binary);
  if (!os) throw InputError("cannot open " + o.out + " for writing");
  for (int j = 0; j < file.p; ++j) os << 'x' << j + 1 << ',';
  os << "dose,weight\n";
  char buf[40];
  for (const Vector& x : xs) {
    if (x.size() != file.p) throw InputError("policy: covariate file has the wrong number of columns");
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", x[j]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,", optimal_dose(cs, x, file.grid));
    os << buf;
    std::snprintf(buf, sizeof buf, "%.17g\n", weight(cs.pref, x));
    os << buf;
  }
  out << "wrote " << xs.size() << " doses\n";
  return kOk;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream&) {
  std::string text = io::read_text(o.scenario);
  std::vector<Scenario> scenarios = io::scenarios_from_json(text);
  if (o.seed || o.reps) {
    // Re-derive per-scenario seeds from the overriding master seed.
    for (std::size_t k = 0; k < scenarios.size(); ++k) {
      if (o.seed) scenarios[k].master_seed = derive_seed(*o.seed, k);
      if (o.reps) scenarios[k].n_reps = *o.reps;
      scenarios[k].validate();
    }
  }
  const int workers = o.workers > 0 ? o.workers : default_workers();
  std::vector<StudyTables> tables;
  for (const auto& s : scenarios) {
    tables.push_back(run_study(s, workers));
    out << "scenario n=" << s.n << " beta0=" << s.beta0 << " flagged=" << tables.back().n_flagged
        << '\n';
  }
  io::write_study_tables(o.out_dir, tables);
  return kOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive preference-weight learning for two-outcome continuous-dose regimes", "awl"};
  app.require_subcommand(1);

  FitOptions fo;
  auto* fit_cmd = app.add_subcommand("fit", "Fit outcome surfaces and (theta, beta); write an estimate JSON");
  fit_cmd->add_option("--data", fo.data, "Data CSV with columns x1..xp,a,y,z")->required();
  fit_cmd->add_option("--out", fo.out, "Estimate JSON to write")->required();
  fit_cmd->add_option("--weight-covs", fo.weight_covs, "1-based covariates in the weight model, e.g. 1,2");
  fit_cmd->add_option("--grid", fo.grid, "Dose grid a_min,a_max,m (default: observed dose range)");
  fit_cmd->add_option("--grid-points", fo.grid_points, "Grid size when --grid is not given");
  fit_cmd->add_option("--interactions", fo.interactions, "Dose interactions: all, none, or 1-based list");
  fit_cmd->add_option("--dose-degree", fo.dose_degree, "1 or 2");
  fit_cmd->add_flag("--no-main-effects", fo.no_main_effects);
  fit_cmd->add_flag("--no-intercept", fo.no_intercept);
  fit_cmd->add_option("--restarts", fo.restarts, "Jittered optimizer restarts");
  fit_cmd->add_option("--seed", fo.seed, "Seed for restart jitter");

  InferOptions io_;
  auto* infer_cmd = app.add_subcommand("infer", "Add standard errors, Wald tests and CIs to an estimate");
  infer_cmd->add_option("--estimate", io_.estimate, "Estimate JSON from `fit`")->required();
  infer_cmd->add_option("--data", io_.data, "The data CSV used for the fit")->required();
  infer_cmd->add_option("--out", io_.out, "Estimate JSON to write")->required();
  infer_cmd->add_option("--level", io_.level, "Confidence level");

  PolicyOptions po;
  auto* policy_cmd = app.add_subcommand("policy", "Recommend doses for new covariates");
  policy_cmd->add_option("--estimate", po.estimate)->required();
  policy_cmd->add_option("--covariates", po.covariates, "CSV with columns x1..xp")->required();
  policy_cmd->add_option("--out", po.out, "Dose CSV to write")->required();

  SimulateOptions so;
  std::uint64_t seed_value = 0;
  int reps_value = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a Monte Carlo study from a scenario JSON");
  sim_cmd->add_option("--scenario", so.scenario)->required();
  sim_cmd->add_option("--out-dir", so.out_dir)->required();
  auto* seed_opt = sim_cmd->add_option("--seed", seed_value, "Master seed (overrides the file)");
  auto* reps_opt = sim_cmd->add_option("--reps", reps_value, "Replications (overrides the file)");
  sim_cmd->add_option("--workers", so.workers, "Worker threads (default: AWL_WORKERS or all cores)");

  std::vector<const char*> argv{"awl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "awl: error kind=input reason=\"" << one_line(e.what()) << "\"\n";
    return kInputError;
  }
  if (*seed_opt) so.seed = seed_value;
  if (*reps_opt) so.reps = reps_value;

  std::optional<Failure> failure;
  try {
    if (fit_cmd->parsed()) return cmd_fit(fo, out, err);
    if (infer_cmd->parsed()) return cmd_infer(io_, out, err);
    if (policy_cmd->parsed()) return cmd_policy(po, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(so, out, err);
  } catch (const InputError& e) {
    failure = Failure{kInputError, "input", e.what()};
  } catch (const InferenceDeclined& e) {
    failure = Failure{kDeclined, "declined", e.what()};
  } catch (const InferenceError& e) {
    failure = Failure{kEstimationError, "inference", e.what()};
  } catch (const EstimationError& e) {
    failure = Failure{kEstimationError, "estimation", e.what()};
  } catch (const NumericError& e) {
    failure = Failure{kEstimationError, "numeric", e.what()};
  } catch (const std::filesystem::filesystem_error& e) {
    failure = Failure{kInputError, "input", e.what()};
  }
  if (failure) {
    err << "awl: error kind=" << failure->kind << " reason=\"" << one_line(failure->reason) << "\"\n";
    return failure->code;
  }
  return kInputError;
}

}  // namespace awl::cli
