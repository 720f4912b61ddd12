#include "awl/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "awl/errors.hpp"
#include "awl/rng.hpp"

namespace awl::io {
namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt10(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw InputError("csv: row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                     ": not a finite number: '" + s + "'");
  }
  return v;
}

bool read_header(std::istream& is, std::vector<std::string>& header) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    header = split(line);
    return true;
  }
  return false;
}

// Columns named x1..xp, in order; returns their positions.
std::vector<std::size_t> covariate_columns(const std::vector<std::string>& header) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "x" + std::to_string(cols.size() + 1)) cols.push_back(c);
  }
  if (cols.empty()) throw InputError("csv: header has no covariate columns x1..xp");
  return cols;
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Matrix json_mat(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != m.cols()) {
      throw InputError("estimate json: ragged matrix");
    }
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

json basis_json(const BasisSpec& b) {
  return {{"degree_in_dose", b.degree_in_dose},
          {"interaction_indices", b.interaction_indices},
          {"include_main_covariates", b.include_main_covariates},
          {"include_intercept", b.include_intercept}};
}

BasisSpec json_basis(const json& j) {
  BasisSpec b;
  b.degree_in_dose = j.at("degree_in_dose").get<int>();
  b.interaction_indices = j.at("interaction_indices").get<std::vector<int>>();
  b.include_main_covariates = j.at("include_main_covariates").get<bool>();
  b.include_intercept = j.at("include_intercept").get<bool>();
  return b;
}

json grid_json(const DoseGrid& g) {
  return {{"a_min", g.a_min()},
          {"a_max", g.a_max()},
          {"m", g.size()},
          {"measure", g.measure() == DoseGrid::Measure::kLebesgue ? "lebesgue" : "counting"}};
}

DoseGrid json_grid(const json& j) {
  const std::string measure = j.value("measure", std::string("lebesgue"));
  if (measure != "lebesgue" && measure != "counting") {
    throw InputError("grid: measure must be 'lebesgue' or 'counting'");
  }
  return DoseGrid(j.at("a_min").get<double>(), j.at("a_max").get<double>(), j.at("m").get<int>(),
                  measure == "lebesgue" ? DoseGrid::Measure::kLebesgue
                                        : DoseGrid::Measure::kCounting);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  return os;
}

}  // namespace

void write_samples_csv(std::ostream& os, const std::vector<Sample>& samples) {
  if (samples.empty()) throw InputError("csv: no samples to write");
  const auto p = samples.front().x.size();
  for (Eigen::Index j = 0; j < p; ++j) os << 'x' << j + 1 << ',';
  os << "a,y,z\n";
  for (const auto& s : samples) {
    if (s.x.size() != p) throw InputError("csv: ragged covariate vectors");
    for (Eigen::Index j = 0; j < p; ++j) os << fmt17(s.x[j]) << ',';
    os << fmt17(s.a) << ',' << fmt17(s.y) << ',' << fmt17(s.z) << '\n';
  }
}

std::vector<Sample> read_samples_csv(std::istream& is) {
  std::vector<std::string> header;
  if (!read_header(is, header)) throw InputError("csv: empty input");
  const auto xcols = covariate_columns(header);
  const std::size_t p = xcols.size();
  if (header.size() != p + 3 || header[p] != "a" || header[p + 1] != "y" || header[p + 2] != "z") {
    throw InputError("csv: expected header x1..xp,a,y,z");
  }
  std::vector<Sample> out;
  std::string line;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw InputError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    }
    Sample s;
    s.x.resize(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) s.x[static_cast<Eigen::Index>(j)] = parse_double(cells[j], row, j);
    s.a = parse_double(cells[p], row, p);
    s.y = parse_double(cells[p + 1], row, p + 1);
    s.z = parse_double(cells[p + 2], row, p + 2);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw InputError("csv: no data rows");
  return out;
}

std::vector<Vector> read_covariates_csv(std::istream& is) {
  std::vector<std::string> header;
  if (!read_header(is, header)) throw InputError("csv: empty input");
  const auto xcols = covariate_columns(header);
  std::vector<Vector> out;
  std::string line;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw InputError("csv: row " + std::to_string(row) + " has the wrong number of fields");
    }
    Vector x(static_cast<Eigen::Index>(xcols.size()));
    for (std::size_t j = 0; j < xcols.size(); ++j) {
      x[static_cast<Eigen::Index>(j)] = parse_double(cells[xcols[j]], row, xcols[j]);
    }
    out.push_back(std::move(x));
  }
  if (out.empty()) throw InputError("csv: no data rows");
  return out;
}

std::vector<Sample> read_samples_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_samples_csv(is);
}

std::vector<Vector> read_covariates_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_covariates_csv(is);
}

CompositeSurface EstimateFile::composite() const {
  return CompositeSurface(q_y, q_z, PreferenceModel(shape, estimate.theta_hat));
}

std::string estimate_to_json(const EstimateFile& f) {
  const EstimateResult& e = f.estimate;
  json j;
  j["format_version"] = kEstimateFormatVersion;
  j["n"] = f.n;
  j["p"] = f.p;
  j["theta"] = vec_json(e.theta_hat);
  j["beta"] = e.beta_hat;
  if (f.shape.covariate_indices.empty()) j["omega"] = expit(e.theta_hat[0]);
  j["loglik"] = e.loglik;
  j["iterations"] = e.iterations;
  j["converged"] = e.converged;
  j["grad_norm"] = e.grad_norm;
  j["hessian_condition"] = std::isfinite(e.hessian_condition) ? json(e.hessian_condition) : json(nullptr);
  j["flags"] = e.flags.names();
  j["covariance"] = f.covariance ? mat_json(*f.covariance) : json(nullptr);
  std::vector<int> one_based;
  for (int k : f.shape.covariate_indices) one_based.push_back(k + 1);
  j["weight_covariates"] = one_based;
  j["grid"] = grid_json(f.grid);
  j["surfaces"] = {
      {"y", {{"basis", basis_json(f.q_y.basis())}, {"coeffs", vec_json(f.q_y.coeffs())}}},
      {"z", {{"basis", basis_json(f.q_z.basis())}, {"coeffs", vec_json(f.q_z.coeffs())}}}};
  if (f.inference) {
    const InferenceResult& inf = *f.inference;
    std::vector<std::string> names{"beta"};
    for (Eigen::Index k = 0; k < e.theta_hat.size(); ++k) names.push_back("theta" + std::to_string(k));
    json params = json::array();
    for (Eigen::Index k = 0; k < inf.se.size(); ++k) {
      params.push_back({{"name", names[static_cast<std::size_t>(k)]},
                        {"estimate", inf.estimates[k]},
                        {"se", inf.se[k]},
                        {"z", inf.z_stats[k]},
                        {"p_value", inf.p_values[k]},
                        {"ci_lo", inf.ci_lo[k]},
                        {"ci_hi", inf.ci_hi[k]}});
    }
    if (f.shape.covariate_indices.empty()) {
      const Vector x0 = Vector::Zero(f.p);
      const WeightInterval ci = weight_ci(f.shape, e.theta_hat, inf.cov_theta(), x0, inf.ci_level);
      params.push_back({{"name", "omega"},
                        {"estimate", ci.w_hat},
                        {"se", ci.se},
                        {"ci_lo", ci.lo},
                        {"ci_hi", ci.hi}});
    }
    j["inference"] = {{"ci_level", inf.ci_level},
                      {"b_matrix", mat_json(inf.b_hat)},
                      {"condition", inf.condition},
                      {"parameters", params}};
  }
  return j.dump(2) + "\n";
}

EstimateFile estimate_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kEstimateFormatVersion) {
      throw InputError("estimate json: unsupported format_version " + std::to_string(version));
    }
    const int p = j.at("p").get<int>();
    WeightShape shape;
    for (int k : j.at("weight_covariates").get<std::vector<int>>()) {
      shape.covariate_indices.push_back(k - 1);
    }
    shape.validate(p);
    const json& s = j.at("surfaces");
    EstimateFile f{
        .n = j.at("n").get<int>(),
        .p = p,
        .grid = json_grid(j.at("grid")),
        .q_y = OutcomeSurface(json_basis(s.at("y").at("basis")), json_vec(s.at("y").at("coeffs")), p),
        .q_z = OutcomeSurface(json_basis(s.at("z").at("basis")), json_vec(s.at("z").at("coeffs")), p),
        .shape = shape,
        .estimate = {},
        .covariance = std::nullopt,
        .inference = std::nullopt,
    };
    EstimateResult& e = f.estimate;
    e.theta_hat = json_vec(j.at("theta"));
    if (e.theta_hat.size() != shape.dimension()) {
      throw InputError("estimate json: theta length does not match weight_covariates");
    }
    e.beta_hat = j.at("beta").get<double>();
    e.loglik = j.value("loglik", 0.0);
    e.iterations = j.value("iterations", 0);
    e.converged = j.value("converged", false);
    e.grad_norm = j.value("grad_norm", 0.0);
    e.hessian_condition = j.contains("hessian_condition") && !j["hessian_condition"].is_null()
                              ? j["hessian_condition"].get<double>()
                              : std::numeric_limits<double>::infinity();
    for (const auto& name : j.value("flags", std::vector<std::string>{})) {
      if (name == "BETA_NONPOSITIVE") e.flags.beta_nonpositive = true;
      else if (name == "NEAR_SINGULAR") e.flags.near_singular = true;
      else if (name == "MAX_ITER") e.flags.max_iter = true;
      else throw InputError("estimate json: unknown flag " + name);
    }
    if (j.contains("covariance") && !j["covariance"].is_null()) f.covariance = json_mat(j["covariance"]);
    return f;
  } catch (const json::exception& ex) {
    throw InputError(std::string("estimate json: ") + ex.what());
  }
}

std::vector<Scenario> scenarios_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.value("format_version", kScenarioFormatVersion) != kScenarioFormatVersion) {
      throw InputError("scenario json: unsupported format_version");
    }
    Scenario base;
    base.p = j.value("p", base.p);
    base.x_sd = j.value("x_sd", base.x_sd);
    base.noise_sd = j.value("noise_sd", base.noise_sd);
    base.curvature = j.value("curvature", base.curvature);
    if (j.contains("coef_y")) base.coef_y = json_vec(j["coef_y"]);
    if (j.contains("coef_z")) base.coef_z = json_vec(j["coef_z"]);
    base.n_reps = j.value("n_reps", base.n_reps);
    base.eval_size = j.value("eval_size", base.eval_size);
    base.n_restarts = j.value("n_restarts", base.n_restarts);
    base.alpha = j.value("alpha", base.alpha);
    base.ci_level = j.value("ci_level", base.ci_level);
    base.master_seed = j.value("seed", base.master_seed);
    if (j.contains("grid")) base.grid = json_grid(j["grid"]);

    const json& w = j.at("weight");
    const std::string kind = w.at("kind").get<std::string>();
    if (kind == "fixed") {
      base.weight_kind = Scenario::WeightKind::kFixed;
      base.omega0 = w.at("omega0").get<double>();
    } else if (kind == "patient") {
      base.weight_kind = Scenario::WeightKind::kPatientSpecific;
      base.theta0 = json_vec(w.at("theta0"));
    } else {
      throw InputError("scenario json: weight.kind must be 'fixed' or 'patient'");
    }

    auto as_list = [&](const char* key, auto proto) {
      using T = decltype(proto);
      const json& v = j.at(key);
      return v.is_array() ? v.get<std::vector<T>>() : std::vector<T>{v.get<T>()};
    };
    const auto ns = as_list("n", 0);
    const auto betas = as_list("beta0", 0.0);

    std::vector<Scenario> out;
    for (int n : ns) {
      for (double b : betas) {
        Scenario s = base;
        s.n = n;
        s.beta0 = b;
        s.master_seed = derive_seed(base.master_seed, out.size());
        s.validate();
        out.push_back(std::move(s));
      }
    }
    if (out.empty()) throw InputError("scenario json: no (n, beta0) combinations");
    return out;
  } catch (const json::exception& ex) {
    throw InputError(std::string("scenario json: ") + ex.what());
  }
}

void write_study_tables(const std::filesystem::path& dir, const std::vector<StudyTables>& tables) {
  std::filesystem::create_directories(dir);
  auto est = open_out(dir / "estimates.csv");
  auto err = open_out(dir / "errors.csv");
  auto val = open_out(dir / "values.csv");
  auto sum = open_out(dir / "summary.csv");
  est << "weight_kind,n,beta0,parameter,truth,mean,sd,n_used\n";
  err << "weight_kind,n,beta0,test,kind,rate,n_used\n";
  val << "weight_kind,n,beta0,policy,mean,sd,se,n_used\n";
  sum << "weight_kind,n,beta0,n_reps,n_flagged,n_failed\n";
  for (const auto& t : tables) {
    const std::string key = t.weight_kind + ',' + std::to_string(t.n) + ',' + fmt10(t.beta0) + ',';
    for (const auto& r : t.estimate_table) {
      est << key << r.parameter << ',' << fmt10(r.truth) << ',' << fmt10(r.mean) << ','
          << fmt10(r.sd) << ',' << r.n_used << '\n';
    }
    for (const auto& r : t.error_table) {
      err << key << r.test << ',' << r.kind << ',' << fmt10(r.rate) << ',' << r.n_used << '\n';
    }
    for (const auto& r : t.value_table) {
      val << key << r.policy << ',' << fmt10(r.mean) << ',' << fmt10(r.sd) << ',' << fmt10(r.se)
          << ',' << r.n_used << '\n';
    }
    sum << key << t.n_reps << ',' << t.n_flagged << ',' << t.n_failed << '\n';
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  auto os = open_out(path);
  os << text;
}

}  // namespace awl::io
