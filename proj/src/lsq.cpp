#include "photonlab/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "photonlab/error.hpp"

namespace photonlab {

double FitResult::value(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw UsageError("FitResult has no parameter '" + name + "'");
}

double FitResult::error(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return standard_errors[i];
  throw UsageError("FitResult has no parameter '" + name + "'");
}

bool FitResult::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool FitResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

void FitResult::set(const std::string& name, const std::string& unit, double v, double e) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      units[i] = unit;
      values[i] = v;
      standard_errors[i] = e;
      return;
    }
  }
  names.push_back(name);
  units.push_back(unit);
  values.push_back(v);
  standard_errors.push_back(e);
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const FitResult& r) {
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    params[r.names[i]] = {{"value", number_or_null(r.values[i])},
                          {"error", number_or_null(r.standard_errors[i])},
                          {"unit", r.units[i]}};
  }
  return {{"parameters", params},
          {"residual_norm", number_or_null(r.residual_norm)},
          {"chi2", number_or_null(r.chi2)},
          {"dof", r.dof},
          {"gradient_norm", number_or_null(r.gradient_norm)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"flags", r.flags}};
}

double default_jacobian_step() { return std::cbrt(std::numeric_limits<double>::epsilon()); }

Eigen::MatrixXd numeric_jacobian(const ResidualFunction& f, std::size_t m,
                                 std::span<const double> params,
                                 std::span<const FitParameter> bounds, double rel_step) {
  const std::size_t n = params.size();
  Eigen::MatrixXd J(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> rp(m), rm(m), rp2(m), rm2(m);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = params[j];
    const double h = rel_step * std::max(std::abs(x), 1e-3);
    double lower = -std::numeric_limits<double>::infinity(), upper = std::numeric_limits<double>::infinity();
    if (j < bounds.size()) {
      lower = bounds[j].lower;
      upper = bounds[j].upper;
    }
    if (x - 2 * h >= lower && x + 2 * h <= upper) {
      // fourth-order central stencil
      p[j] = x + h;
      f(p, rp);
      p[j] = x - h;
      f(p, rm);
      p[j] = x + 2 * h;
      f(p, rp2);
      p[j] = x - 2 * h;
      f(p, rm2);
      p[j] = x;
      for (std::size_t i = 0; i < m; ++i)
        J(Eigen::Index(i), Eigen::Index(j)) = (8.0 * (rp[i] - rm[i]) - (rp2[i] - rm2[i])) / (12.0 * h);
      continue;
    }
    const double hi = std::min(x + h, upper), lo = std::max(x - h, lower);
    p[j] = hi;
    f(p, rp);
    p[j] = lo;
    f(p, rm);
    p[j] = x;
    const double span = hi - lo;
    for (std::size_t i = 0; i < m; ++i) J(Eigen::Index(i), Eigen::Index(j)) = (rp[i] - rm[i]) / span;
  }
  return J;
}

namespace {

void check_rank(const Eigen::MatrixXd& J, const std::vector<FitParameter>& params, double tol) {
  const auto n = J.cols();
  Eigen::VectorXd norms = J.colwise().norm();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(norms[j] > 0.0) || !std::isfinite(norms[j])) {
      throw RankDeficiencyError("singular Jacobian: the data do not constrain '" +
                                    params[std::size_t(j)].name + "'",
                                params[std::size_t(j)].name);
    }
  }
  Eigen::MatrixXd Js = J * norms.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Js, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s[n - 1] <= tol * s[0]) {
    const Eigen::VectorXd v = svd.matrixV().col(n - 1);
    std::string dir;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(v[j]) < 0.1) continue;
      if (!dir.empty()) dir += " ";
      dir += (v[j] < 0 ? "-" : "+") + params[std::size_t(j)].name;
    }
    throw RankDeficiencyError("singular Jacobian: unidentifiable direction (" + dir + ")", dir);
  }
}

double cost_of(const std::vector<double>& r) {
  double c = 0.0;
  for (double v : r) c += v * v;
  return c;
}

}  // namespace

FitResult least_squares(const LeastSquaresProblem& prob, const LeastSquaresOptions& opt) {
  const std::size_t n = prob.parameters.size();
  const std::size_t m = prob.n_residuals;
  if (prob.initial.size() != n) throw UsageError("least_squares: initial vector size mismatch");
  if (m < n) {
    throw UsageError("least_squares: " + std::to_string(m) + " residuals for " +
                     std::to_string(n) + " parameters");
  }
  const auto& bnd = prob.parameters;
  auto clamp = [&](std::vector<double>& p) {
    for (std::size_t j = 0; j < n; ++j) p[j] = std::clamp(p[j], bnd[j].lower, bnd[j].upper);
  };

  std::vector<double> p = prob.initial;
  clamp(p);
  std::vector<double> r(m), r_trial(m);
  prob.residuals(p, r);
  double cost = cost_of(r);
  if (!std::isfinite(cost)) throw EstimationError("least_squares: non-finite residual at start");

  const double h = default_jacobian_step();
  Eigen::MatrixXd J = numeric_jacobian(prob.residuals, m, p, bnd, h);
  check_rank(J, bnd, opt.rank_tolerance);

  FitResult res;
  // λ = 0 is a plain Gauss–Newton step; damping switches on after a rejection.
  double lambda = 0.0;
  int it = 0;
  bool converged = false;

  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * Eigen::Map<const Eigen::VectorXd>(r.data(), Eigen::Index(m));
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      converged = true;
      break;
    }
    Eigen::VectorXd diag = JtJ.diagonal().cwiseMax(1e-300);

    bool accepted = false;
    bool tiny_step = false;
    while (!accepted) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * diag;
      const Eigen::VectorXd delta = A.ldlt().solve(-g);
      std::vector<double> trial(n);
      for (std::size_t j = 0; j < n; ++j) trial[j] = p[j] + delta[Eigen::Index(j)];
      clamp(trial);
      double step = 0.0, scale = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        step += (trial[j] - p[j]) * (trial[j] - p[j]);
        scale += p[j] * p[j];
      }
      step = std::sqrt(step);
      scale = std::sqrt(scale);
      if (step <= opt.step_tolerance * (scale + opt.step_tolerance)) {
        tiny_step = true;
        break;
      }
      prob.residuals(trial, r_trial);
      const double c_trial = cost_of(r_trial);
      if (std::isfinite(c_trial) && c_trial < cost) {
        p = std::move(trial);
        r.swap(r_trial);
        cost = c_trial;
        lambda = lambda / 3.0 < 1e-12 ? 0.0 : lambda / 3.0;
        accepted = true;
      } else {
        lambda = lambda == 0.0 ? 1e-3 : lambda * 4.0;
        if (lambda > 1e16) break;
      }
    }
    if (tiny_step) {
      converged = true;
      break;
    }
    if (!accepted) break;  // damping exhausted without progress
    J = numeric_jacobian(prob.residuals, m, p, bnd, h);
  }

  // Final Jacobian and covariance at the solution.
  J = numeric_jacobian(prob.residuals, m, p, bnd, h);
  const Eigen::VectorXd g = J.transpose() * Eigen::Map<const Eigen::VectorXd>(r.data(), Eigen::Index(m));
  Eigen::MatrixXd cov = (J.transpose() * J).completeOrthogonalDecomposition().pseudoInverse();
  res.dof = int(m) - int(n);
  res.chi2 = cost;
  if (opt.scale_covariance && res.dof > 0) cov *= cost / double(res.dof);

  res.names.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    res.names.push_back(bnd[j].name);
    res.units.push_back(bnd[j].unit);
    res.values.push_back(p[j]);
    res.standard_errors.push_back(std::sqrt(std::max(0.0, cov(Eigen::Index(j), Eigen::Index(j)))));
    if (p[j] == bnd[j].lower || p[j] == bnd[j].upper) res.flags.push_back("bound_hit:" + bnd[j].name);
  }
  res.covariance = std::move(cov);
  res.residual_norm = std::sqrt(cost);
  res.gradient_norm = g.lpNorm<Eigen::Infinity>();
  res.iterations = it;
  res.converged = converged;
  if (!converged) res.flags.push_back("not_converged");
  return res;
}

FitResult least_squares_fit(const ScalarModel& model, const CurveData& data,
                            std::vector<FitParameter> parameters, std::vector<double> initial,
                            const LeastSquaresOptions& options) {
  const std::size_t m = data.x.size();
  if (data.y.size() != m || data.sigma.size() != m) {
    throw UsageError("least_squares_fit: x, y, sigma length mismatch");
  }
  if (m < parameters.size()) {
    throw UsageError("least_squares_fit: need at least as many points as parameters");
  }
  for (double s : data.sigma) {
    if (!(s > 0.0)) throw UsageError("least_squares_fit: sigma must be positive");
  }
  LeastSquaresProblem prob;
  prob.n_residuals = m;
  prob.parameters = std::move(parameters);
  prob.initial = std::move(initial);
  prob.residuals = [&](std::span<const double> p, std::span<double> r) {
    for (std::size_t i = 0; i < m; ++i) r[i] = (data.y[i] - model(data.x[i], p)) / data.sigma[i];
  };
  return least_squares(prob, options);
}

std::vector<double> poisson_sigma(std::span<const double> counts) {
  std::vector<double> s;
  s.reserve(counts.size());
  for (double c : counts) s.push_back(std::sqrt(std::max(c, 1.0)));
  return s;
}

}  // namespace photonlab
