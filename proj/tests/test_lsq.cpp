#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "photonlab/analysis.hpp"
#include "photonlab/error.hpp"
#include "photonlab/lsq.hpp"
#include "photonlab/random.hpp"

using namespace photonlab;

namespace {

CurveData sample(const ScalarModel& f, std::span<const double> p, double x0, double x1, int n) {
  CurveData d;
  for (int i = 0; i < n; ++i) {
    const double x = x0 + (x1 - x0) * i / (n - 1);
    d.x.push_back(x);
    d.y.push_back(f(x, p));
    d.sigma.push_back(1.0);
  }
  return d;
}

}  // namespace

TEST_CASE("linear model with exact data converges in at most two iterations") {
  auto line = [](double x, std::span<const double> p) { return p[0] + p[1] * x; };
  const std::vector<double> truth{2.5, -0.75};
  const auto d = sample(line, truth, -3.0, 7.0, 25);
  const auto r = least_squares_fit(line, d, {{"a", ""}, {"b", ""}}, {0.0, 0.0});
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(r.values[0] == doctest::Approx(2.5).epsilon(1e-7));
  CHECK(r.values[1] == doctest::Approx(-0.75).epsilon(1e-7));
  CHECK(r.chi2 < 1e-12);
}

TEST_CASE("noiseless exponential from a distant start") {
  auto f = [](double x, std::span<const double> p) { return std::exp(-x / p[0]); };
  const std::vector<double> truth{1.5};
  const auto d = sample(f, truth, 0.0, 10.0, 50);
  const auto r = least_squares_fit(f, d, {{"tau", "ns", 1e-6}}, {3.0});
  CHECK(r.converged);
  CHECK(std::abs(r.values[0] - 1.5) < 1e-6);
}

TEST_CASE("unidentifiable parameter combinations are named") {
  // Only the product a·b is constrained.
  auto f = [](double x, std::span<const double> p) { return p[0] * p[1] * x; };
  const std::vector<double> truth{2.0, 3.0};
  const auto d = sample(f, truth, 0.0, 1.0, 10);
  try {
    least_squares_fit(f, d, {{"a", ""}, {"b", ""}}, {1.0, 1.0});
    FAIL("expected a rank deficiency");
  } catch (const RankDeficiencyError& e) {
    CHECK(e.direction().find("a") != std::string::npos);
    CHECK(e.direction().find("b") != std::string::npos);
  }
  // A parameter the model ignores.
  auto g = [](double x, std::span<const double> p) { return p[0] * x; };
  try {
    least_squares_fit(g, d, {{"slope", ""}, {"unused", ""}}, {1.0, 1.0});
    FAIL("expected a rank deficiency");
  } catch (const RankDeficiencyError& e) {
    CHECK(e.direction() == "unused");
  }
}

TEST_CASE("iteration cap is reported, never silent") {
  auto f = [](double x, std::span<const double> p) { return p[1] * std::exp(-x / p[0]); };
  const std::vector<double> truth{1.5, 10.0};
  const auto d = sample(f, truth, 0.0, 10.0, 50);
  LeastSquaresOptions o;
  o.max_iterations = 1;
  const auto r = least_squares_fit(f, d, {{"tau", ""}, {"A", ""}}, {6.0, 1.0}, o);
  CHECK_FALSE(r.converged);
  CHECK(r.has_flag("not_converged"));
}

TEST_CASE("box constraints are respected and reported") {
  auto f = [](double x, std::span<const double> p) { return p[0] + 0.0 * x; };
  const std::vector<double> truth{-2.0};
  const auto d = sample(f, truth, 0.0, 1.0, 5);
  const auto r = least_squares_fit(f, d, {{"level", "", 0.0}}, {1.0});
  CHECK(r.values[0] == 0.0);
  CHECK(r.has_flag("bound_hit:level"));
}

TEST_CASE("input validation") {
  auto f = [](double x, std::span<const double> p) { return p[0] * x; };
  CurveData d{{1.0, 2.0}, {1.0, 2.0}, {1.0, 0.0}};
  CHECK_THROWS_AS(least_squares_fit(f, d, {{"a", ""}}, {1.0}), UsageError);
  CurveData e{{1.0}, {1.0}, {1.0}};
  CHECK_THROWS_AS(least_squares_fit(f, e, {{"a", ""}, {"b", ""}}, {1.0, 1.0}), UsageError);
}

TEST_CASE("standard errors match the analytic straight-line result") {
  auto line = [](double x, std::span<const double> p) { return p[0] + p[1] * x; };
  CurveData d;
  for (int i = 0; i < 11; ++i) {
    d.x.push_back(i);
    d.y.push_back(1.0 + 2.0 * i + (i % 2 ? 0.3 : -0.3));
    d.sigma.push_back(0.5);
  }
  const auto r = least_squares_fit(line, d, {{"a", ""}, {"b", ""}}, {0.0, 0.0});
  // var(b) = σ² / Σ(x − x̄)², var(a) = σ² Σx² / (n Σ(x − x̄)²)
  const double sxx = 110.0;
  CHECK(r.standard_errors[1] == doctest::Approx(0.5 / std::sqrt(sxx)).epsilon(1e-6));
  CHECK(r.standard_errors[0] == doctest::Approx(0.5 * std::sqrt(385.0 / (11.0 * sxx))).epsilon(1e-6));
  CHECK(r.dof == 9);
}

TEST_CASE("fit result JSON") {
  FitResult r;
  r.set("l_coh_um", "um", INFINITY, NAN);
  r.set("V0", "", 0.98, 0.01);
  r.converged = true;
  r.flags.push_back("bound_hit:l_coh_um");
  const auto j = to_json(r);
  CHECK(j["parameters"]["l_coh_um"]["value"].is_null());
  CHECK(j["parameters"]["V0"]["value"] == 0.98);
  CHECK(j["converged"] == true);
  CHECK(j["flags"][0] == "bound_hit:l_coh_um");
}

// Derivatives of every fit model: the engine's difference quotient against
// one taken with a ten times smaller step.
TEST_CASE("model Jacobians agree across step sizes") {
  struct Case {
    const char* name;
    ScalarModel f;
    std::vector<std::pair<double, double>> ranges;  // per-parameter sampling range
    double x0, x1;
  };
  const std::vector<Case> cases{
      {"lorentzian", model::lorentzian, {{790, 799}, {0.5, 3}, {100, 1e4}, {0, 100}}, 785, 805},
      {"fringe", [](double x, std::span<const double> p) { return model::fringe(x, p, 794.7); },
       {{500, 2e4}, {-5e3, 5e3}, {-5e3, 5e3}}, 1e4, 1.16e4},
      {"fringe_segment",
       [](double x, std::span<const double> p) { return model::fringe_segment(x, p, 794.7, 1.08e4); },
       {{500, 2e4}, {-5e3, 5e3}, {-5e3, 5e3}, {-50, 50}, {-50, 50}}, 1.0e4, 1.16e4},
      {"visibility", model::visibility, {{0.005, 0.05}, {0.5, 1.0}}, 0, 190},
      {"g2_dip", [](double x, std::span<const double> p) { return model::g2_dip(x, p, 256.0); },
       {{0.2, 1.0}, {400, 3000}, {0.9, 1.1}}, -10000, 10000},
      {"decay", model::decay, {{0.5, 3}, {100, 1e4}, {0, 50}}, 0.5, 45},
      {"harmonic4", [](double x, std::span<const double> p) { return model::harmonic(x, p, 4.0); },
       {{100, 2000}, {-500, 500}, {-500, 500}}, 0, 180},
      {"harmonic2", [](double x, std::span<const double> p) { return model::harmonic(x, p, 2.0); },
       {{100, 2000}, {-500, 500}, {-500, 500}}, 0, 360},
  };
  std::mt19937_64 rng(2024);
  const double h = default_jacobian_step();
  for (const auto& c : cases) {
    const std::string name = c.name;
    CAPTURE(name);
    const int m = 41;
    std::vector<double> xs;
    for (int i = 0; i < m; ++i) xs.push_back(c.x0 + (c.x1 - c.x0) * i / (m - 1));
    ResidualFunction res = [&](std::span<const double> p, std::span<double> r) {
      for (int i = 0; i < m; ++i) r[std::size_t(i)] = c.f(xs[std::size_t(i)], p);
    };
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> p;
      for (const auto& [lo, hi] : c.ranges) p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
      const auto J1 = numeric_jacobian(res, m, p, {}, h);
      const auto J2 = numeric_jacobian(res, m, p, {}, h / 10.0);
      for (Eigen::Index j = 0; j < J1.cols(); ++j) {
        const double scale = J1.col(j).lpNorm<Eigen::Infinity>();
        const double diff = (J1.col(j) - J2.col(j)).lpNorm<Eigen::Infinity>();
        CHECK(diff <= 1e-5 * scale);
      }
    }
  }
}

TEST_CASE("Jacobian matches analytic derivatives") {
  // d/dτ of A exp(−t/τ) = A t / τ² exp(−t/τ)
  const std::vector<double> p{1.5, 1000.0, 10.0};
  const std::vector<double> ts{0.5, 1.0, 2.0, 5.0};
  ResidualFunction res = [&](std::span<const double> q, std::span<double> r) {
    for (std::size_t i = 0; i < ts.size(); ++i) r[i] = model::decay(ts[i], q);
  };
  const auto J = numeric_jacobian(res, ts.size(), p, {}, default_jacobian_step());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double e = std::exp(-ts[i] / 1.5);
    CHECK(J(Eigen::Index(i), 0) == doctest::Approx(1000.0 * ts[i] / 2.25 * e).epsilon(1e-8));
    CHECK(J(Eigen::Index(i), 1) == doctest::Approx(e).epsilon(1e-8));
    CHECK(J(Eigen::Index(i), 2) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("Poisson-noisy Lorentzian: estimates within 3 standard errors in at least 99 of 100 trials") {
  const LorentzianLine truth{794.7, 1.6, 1e4, 50.0};
  std::vector<double> w;
  for (double x = 786.7; x <= 802.7 + 1e-9; x += 0.1) w.push_back(x);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = make_rng(seed, 77);
    CurveData d;
    for (double x : w) {
      d.x.push_back(x);
      d.y.push_back(double(poisson(rng, lorentzian_value(truth, x))));
    }
    d.sigma = poisson_sigma(d.y);
    const auto r = least_squares_fit(model::lorentzian, d,
                                     {{"center_nm", "nm"}, {"fwhm_nm", "nm", 1e-6}, {"amplitude", ""}, {"offset", ""}},
                                     {794.5, 1.0, 9000.0, 40.0});
    const double t[4] = {truth.center_nm, truth.fwhm_nm, truth.amplitude, truth.offset};
    bool all = r.converged;
    for (int j = 0; j < 4; ++j) all = all && std::abs(r.values[std::size_t(j)] - t[j]) <= 3.0 * r.standard_errors[std::size_t(j)];
    ok += all;
  }
  MESSAGE("Lorentzian trials within 3 sigma: " << ok << "/100");
  CHECK(ok >= 99);
}
