#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace photonlab {

struct FitParameter {
  std::string name;
  std::string unit;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<double> values;
  std::vector<double> standard_errors;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;  // ‖r‖ of the weighted residual vector
  double chi2 = 0.0;
  int dof = 0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> flags;  // e.g. "bound_hit:l_coh_um", "peak_at_edge"

  double value(const std::string& name) const;
  double error(const std::string& name) const;
  bool has(const std::string& name) const;
  bool has_flag(const std::string& flag) const;
  void set(const std::string& name, const std::string& unit, double value, double error);
};

nlohmann::json to_json(const FitResult& r);

using ResidualFunction = std::function<void(std::span<const double> params, std::span<double> residuals)>;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-8;       // relative parameter step
  double gradient_tolerance = 1e-10;  // ‖Jᵀr‖∞
  bool scale_covariance = false;      // multiply covariance by χ²/dof
  double rank_tolerance = 1e-12;      // on the column-scaled singular values
};

struct LeastSquaresProblem {
  ResidualFunction residuals;
  std::size_t n_residuals = 0;
  std::vector<FitParameter> parameters;
  std::vector<double> initial;
};

// Damped Gauss–Newton (Levenberg–Marquardt) on ½‖r(p)‖² with a central
// difference Jacobian and box constraints by projection. Deterministic.
// Throws RankDeficiencyError naming the unidentifiable parameter direction.
FitResult least_squares(const LeastSquaresProblem& problem, const LeastSquaresOptions& options = {});

// Numerical Jacobian used by the engine (central differences, relative step
// `rel_step`), exposed for verification.
Eigen::MatrixXd numeric_jacobian(const ResidualFunction& f, std::size_t n_residuals,
                                 std::span<const double> params,
                                 std::span<const FitParameter> bounds, double rel_step);
double default_jacobian_step();

using ScalarModel = std::function<double(double x, std::span<const double> params)>;

struct CurveData {
  std::vector<double> x, y, sigma;
};

// Weighted curve fit of y ≈ model(x; p) with residuals (y − model) / σ.
FitResult least_squares_fit(const ScalarModel& model, const CurveData& data,
                            std::vector<FitParameter> parameters, std::vector<double> initial,
                            const LeastSquaresOptions& options = {});

// σ = √max(y, 1) for count data.
std::vector<double> poisson_sigma(std::span<const double> counts);

}  // namespace photonlab
