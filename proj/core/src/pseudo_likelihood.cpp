#include "awl/pseudo_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "awl/errors.hpp"

namespace awl {

Vector pack_params(double beta, const Vector& theta) {
  Vector v(theta.size() + 1);
  v[0] = beta;
  v.tail(theta.size()) = theta;
  return v;
}

double unpack_beta(const Vector& params) { return params[0]; }

Vector unpack_theta(const Vector& params) { return params.tail(params.size() - 1); }

PseudoLikelihood::PseudoLikelihood(std::span<const Sample> data, const OutcomeSurface& q_y,
                                   const OutcomeSurface& q_z, WeightShape shape, DoseGrid grid)
    : shape_(std::move(shape)), grid_(std::move(grid)) {
  if (data.empty()) throw InputError("pseudo-likelihood: no observations");
  const auto n = static_cast<Eigen::Index>(data.size());
  const int m = grid_.size();
  const int p = q_y.n_covariates();
  if (q_z.n_covariates() != p) throw InputError("pseudo-likelihood: surfaces disagree on p");
  shape_.validate(p);

  qz_grid_.resize(m, n);
  r_grid_.resize(m, n);
  qz_obs_.resize(n);
  r_obs_.resize(n);
  xw_.resize(shape_.dimension(), n);

  Vector qy_col(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = data[static_cast<std::size_t>(i)];
    if (!grid_.contains(s.a)) {
      throw InputError("pseudo-likelihood: dose " + std::to_string(s.a) + " of observation " +
                       std::to_string(i) + " lies outside the grid interval");
    }
    q_y.eval_on_grid(s.x, grid_, qy_col);
    q_z.eval_on_grid(s.x, grid_, qz_grid_.col(i));
    r_grid_.col(i) = qy_col - qz_grid_.col(i);
    const double qy = q_y(s.x, s.a);
    qz_obs_[i] = q_z(s.x, s.a);
    r_obs_[i] = qy - qz_obs_[i];
    xw_.col(i) = shape_.design(s.x);
  }
  if (!qz_grid_.allFinite() || !r_grid_.allFinite() || !qz_obs_.allFinite() ||
      !r_obs_.allFinite()) {
    throw NumericError("pseudo-likelihood: non-finite outcome surface value");
  }
}

PseudoLikelihood::Terms PseudoLikelihood::evaluate(const Vector& theta, double beta,
                                                   Order order) const {
  const int q = shape_.dimension();
  if (theta.size() != q) throw InputError("pseudo-likelihood: theta has the wrong length");
  const int m = grid_.size();
  const Vector& qw = grid_.weights();
  const bool want_score = order != Order::kValue;
  const bool want_hessian = order == Order::kHessian;

  Terms t;
  if (want_score) t.score = Vector::Zero(q + 1);
  if (want_hessian) {
    t.hessian = Matrix::Zero(q + 1, q + 1);
    t.information = Matrix::Zero(q + 1, q + 1);
  }

  Vector qv(m);
  Vector e(m);
  Vector wp(q);
  for (Eigen::Index i = 0; i < qz_obs_.size(); ++i) {
    const auto xw = xw_.col(i);
    const double w = expit(xw.dot(theta));
    const auto qz = qz_grid_.col(i);
    const auto r = r_grid_.col(i);

    qv = qz + w * r;
    const double shift = beta * qv.maxCoeff();
    const double shift_lo = beta * qv.minCoeff();
    const double top = std::max(shift, shift_lo);
    e = ((beta * qv.array() - top).exp() * qw.array()).matrix();
    const double total = e.sum();
    const double q_obs = qz_obs_[i] + w * r_obs_[i];
    t.loglik += beta * q_obs - (top + std::log(total));
    if (!want_score) continue;

    e /= total;
    const double eq = e.dot(qv);
    const double er = e.dot(r);
    const double s = w * (1.0 - w);
    wp = s * xw;
    const double dr = r_obs_[i] - er;
    t.score[0] += q_obs - eq;
    t.score.tail(q) += beta * dr * wp;
    if (!want_hessian) continue;

    double vq = 0.0;
    double cqr = 0.0;
    double vr = 0.0;
    for (int j = 0; j < m; ++j) {
      const double a = qv[j] - eq;
      const double b = r[j] - er;
      vq += e[j] * a * a;
      cqr += e[j] * a * b;
      vr += e[j] * b * b;
    }
    const double wpp = s * (1.0 - 2.0 * w);
    t.hessian(0, 0) -= vq;
    t.hessian.col(0).tail(q) += (dr - beta * cqr) * wp;
    t.hessian.bottomRightCorner(q, q) +=
        (beta * dr * wpp) * (xw * xw.transpose()) - (beta * beta * vr) * (wp * wp.transpose());

    t.information(0, 0) += vq;
    t.information.col(0).tail(q) += beta * cqr * wp;
    t.information.bottomRightCorner(q, q) += (beta * beta * vr) * (wp * wp.transpose());
  }

  if (want_hessian) {
    t.hessian.row(0).tail(q) = t.hessian.col(0).tail(q).transpose();
    t.information.row(0).tail(q) = t.information.col(0).tail(q).transpose();
  }
  if (!std::isfinite(t.loglik)) throw NumericError("pseudo-likelihood: non-finite log-likelihood");
  return t;
}

double PseudoLikelihood::loglik(const Vector& theta, double beta) const {
  return evaluate(theta, beta, Order::kValue).loglik;
}

Vector PseudoLikelihood::score(const Vector& theta, double beta) const {
  return evaluate(theta, beta, Order::kScore).score;
}

Matrix PseudoLikelihood::hessian(const Vector& theta, double beta) const {
  return evaluate(theta, beta, Order::kHessian).hessian;
}

double loglik(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
              const WeightShape& shape, const Vector& theta, double beta, const DoseGrid& grid) {
  return PseudoLikelihood(data, q_y, q_z, shape, grid).loglik(theta, beta);
}

Vector score(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
             const WeightShape& shape, const Vector& theta, double beta, const DoseGrid& grid) {
  return PseudoLikelihood(data, q_y, q_z, shape, grid).score(theta, beta);
}

Matrix hessian(std::span<const Sample> data, const OutcomeSurface& q_y, const OutcomeSurface& q_z,
               const WeightShape& shape, const Vector& theta, double beta, const DoseGrid& grid) {
  return PseudoLikelihood(data, q_y, q_z, shape, grid).hessian(theta, beta);
}

std::vector<std::string> FitFlags::names() const {
  std::vector<std::string> out;
  if (beta_nonpositive) out.emplace_back("BETA_NONPOSITIVE");
  if (near_singular) out.emplace_back("NEAR_SINGULAR");
  if (max_iter) out.emplace_back("MAX_ITER");
  return out;
}

double symmetric_condition(const Matrix& m) {
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  const Vector abs = eig.eigenvalues().cwiseAbs();
  const double lo = abs.minCoeff();
  const double hi = abs.maxCoeff();
  if (hi == 0.0 || lo <= hi * std::numeric_limits<double>::epsilon() * 1e-2) {
    return std::numeric_limits<double>::infinity();
  }
  return hi / lo;
}

namespace {

// Steps longer than this (in parameter space) are shortened before the line search.
constexpr double kMaxStep = 5.0;
constexpr int kMaxHalvings = 60;

struct StartResult {
  Vector params;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool hit_max_iter = false;
  double grad_norm = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

std::string format_trace(const std::vector<double>& trace) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t k = 0; k < trace.size(); ++k) os << (k ? "," : "") << trace[k];
  return os.str();
}

StartResult climb(const PseudoLikelihood& problem, Vector params, const FitConfig& cfg) {
  using Order = PseudoLikelihood::Order;
  const double n = problem.n();
  StartResult out;

  auto eval = [&](const Vector& v, Order order) {
    return problem.evaluate(unpack_theta(v), unpack_beta(v), order);
  };
  auto try_value = [&](const Vector& v) {
    try {
      return problem.loglik(unpack_theta(v), unpack_beta(v));
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  PseudoLikelihood::Terms cur;
  try {
    cur = eval(params, Order::kHessian);
  } catch (const NumericError& e) {
    throw EstimationError(std::string("fit: objective not finite at the starting point: ") +
                          e.what());
  }
  out.trace.push_back(cur.loglik);

  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    out.grad_norm = cur.score.norm() / n;
    if (!cur.score.allFinite() || !cur.hessian.allFinite()) {
      throw EstimationError("fit: non-finite score or Hessian at iteration " +
                                std::to_string(iter),
                            format_trace(out.trace));
    }
    if (out.grad_norm < cfg.tol_grad) {
      out.converged = true;
      break;
    }
    if (iter >= cfg.max_iter) {
      out.hit_max_iter = true;
      break;
    }

    const Vector& g = cur.score;
    Vector dir;
    Eigen::LDLT<Matrix> ldlt(-cur.hessian);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 0.0).all()) {
      dir = ldlt.solve(g);
      if (!dir.allFinite() || g.dot(dir) <= 0.0) dir.resize(0);
    }
    if (dir.size() == 0) {
      // Shift the spectrum of -H until it is positive definite.
      Eigen::SelfAdjointEigenSolver<Matrix> eig(-cur.hessian);
      if (eig.info() == Eigen::Success) {
        const Vector& lam = eig.eigenvalues();
        const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-12);
        const double shift = std::max(0.0, -lam.minCoeff()) + 1e-3 * scale;
        const Vector shifted = (lam.array() + shift).matrix();
        dir = eig.eigenvectors() *
              (eig.eigenvectors().transpose() * g).cwiseQuotient(shifted);
        if (!dir.allFinite() || g.dot(dir) <= 0.0) dir.resize(0);
      }
    }
    if (dir.size() == 0) {
      const double curv = -g.dot(cur.hessian * g);
      const double alpha = curv > 0.0 ? g.squaredNorm() / curv : 1.0 / g.norm();
      dir = alpha * g;
    }
    const double len = dir.norm();
    if (len > kMaxStep) dir *= kMaxStep / len;

    double step = 1.0;
    bool accepted = false;
    Vector trial;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      trial = params + step * dir;
      const double ll = try_value(trial);
      if (std::isfinite(ll) && ll >= cur.loglik) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    PseudoLikelihood::Terms next;
    try {
      next = eval(trial, Order::kHessian);
    } catch (const NumericError& e) {
      throw EstimationError(std::string("fit: ") + e.what(), format_trace(out.trace));
    }
    params = std::move(trial);
    cur = std::move(next);
    out.trace.push_back(cur.loglik);
  }

  out.params = std::move(params);
  out.loglik = cur.loglik;
  return out;
}

}  // namespace

EstimateResult fit(const PseudoLikelihood& problem, const FitConfig& config) {
  const int q = problem.shape().dimension();
  if (problem.n() < 1 + q) {
    throw InputError("fit: need at least " + std::to_string(1 + q) + " observations");
  }
  if (!(config.tol_grad > 0.0) || config.max_iter < 1 || config.n_restarts < 0) {
    throw InputError("fit: invalid configuration");
  }
  Vector theta0 = config.init_theta.size() == 0 ? Vector::Zero(q) : config.init_theta;
  if (theta0.size() != q) throw InputError("fit: init_theta has the wrong length");

  std::vector<Vector> starts{pack_params(config.init_beta, theta0)};
  std::mt19937_64 jitter(config.jitter_seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (int r = 0; r < config.n_restarts; ++r) {
    Vector v = starts.front();
    v[0] *= std::exp(normal(jitter));
    for (int k = 1; k < v.size(); ++k) v[k] += normal(jitter);
    starts.push_back(std::move(v));
  }

  std::optional<StartResult> best;
  std::optional<EstimationError> first_error;
  for (const auto& s : starts) {
    try {
      StartResult r = climb(problem, s, config);
      if (!best) {
        best = std::move(r);
        continue;
      }
      const double diff = r.loglik - best->loglik;
      const bool tie = std::abs(diff) < 1e-10;
      if ((!tie && diff > 0.0) ||
          (tie && unpack_theta(r.params).norm() < unpack_theta(best->params).norm())) {
        best = std::move(r);
      }
    } catch (const EstimationError& e) {
      if (!first_error) first_error = e;
    }
  }
  if (!best) throw *first_error;

  EstimateResult res;
  res.theta_hat = unpack_theta(best->params);
  res.beta_hat = unpack_beta(best->params);
  res.loglik = best->loglik;
  res.iterations = best->iterations;
  res.converged = best->converged;
  res.grad_norm = best->grad_norm;
  res.trace = std::move(best->trace);
  res.hessian = problem.hessian(res.theta_hat, res.beta_hat);
  res.hessian_condition = symmetric_condition(res.hessian);
  res.flags.beta_nonpositive = res.beta_hat <= 0.0;
  res.flags.near_singular = res.hessian_condition > kNearSingularCondition;
  res.flags.max_iter = best->hit_max_iter;
  return res;
}

EstimateResult fit(std::span<const Sample> data, const OutcomeSurface& q_y,
                   const OutcomeSurface& q_z, const WeightShape& shape, const FitConfig& config) {
  return fit(PseudoLikelihood(data, q_y, q_z, shape, config.grid), config);
}

}  // namespace awl
