#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "photonlab/dipole.hpp"
#include "photonlab/error.hpp"
#include "photonlab/kernels/defocus.hpp"

using namespace photonlab;

namespace {

constexpr double kPi = std::numbers::pi;

double peak(const DefocusedImage& im) { return *std::max_element(im.pixels.begin(), im.pixels.end()); }

// Largest pixel difference of b against a transformed copy of a, relative to
// the peak. `map` takes centered (x, y) and returns the source (x, y) in a.
template <class Map>
double max_rel_diff(const DefocusedImage& a, const DefocusedImage& b, Map map) {
  const int c = (a.grid_size - 1) / 2;
  double worst = 0.0;
  for (int y = -c; y <= c; ++y)
    for (int x = -c; x <= c; ++x) {
      const auto [sx, sy] = map(x, y);
      worst = std::max(worst, std::abs(b.at(c + y, c + x) - a.at(c + sy, c + sx)));
    }
  return worst / peak(a);
}

void check_close(std::complex<double> got, double re, double im, double tol) {
  CHECK(std::abs(got.real() - re) < tol);
  CHECK(std::abs(got.imag() - im) < tol);
}

}  // namespace

TEST_CASE("absorption response") {
  CHECK(absorption_response(14.3, 28.6) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(absorption_response(14.3 + 45.0, 28.6) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  for (double a = -180.0; a <= 180.0; a += 7.3) {
    CHECK(absorption_response(a + 90.0, 28.6) == doctest::Approx(absorption_response(a, 28.6)).epsilon(1e-12));
    const double r = absorption_response(a, 28.6);
    CHECK((r >= 0.0 && r <= 1.0));
  }
  // contrast mixes in an unpolarized share around the mean
  CHECK(absorption_response(14.3, 28.6, 0.5) == doctest::Approx(0.75));
  CHECK(absorption_response(59.3, 28.6, 0.5) == doctest::Approx(0.25));
}

TEST_CASE("emission polarizer response") {
  CHECK(emission_polarizer_response(29.9, 29.9) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(emission_polarizer_response(119.9, 29.9) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  for (double b = -180.0; b <= 180.0; b += 11.0) {
    CHECK(emission_polarizer_response(b + 180.0, 29.9) ==
          doctest::Approx(emission_polarizer_response(b, 29.9)).epsilon(1e-12));
  }
}

TEST_CASE("both responses average to one half over a period") {
  // The trapezoid rule is exact for trigonometric polynomials of low degree.
  const int n = 64;
  double a = 0.0, e = 0.0;
  for (int i = 0; i < n; ++i) {
    a += absorption_response(90.0 * i / n, 28.6);
    e += emission_polarizer_response(180.0 * i / n, 29.9);
  }
  CHECK(std::abs(a / n - 0.5) < 1e-12);
  CHECK(std::abs(e / n - 0.5) < 1e-12);
}

TEST_CASE("sweeps carry Poisson noise around the response") {
  std::vector<double> angles;
  for (int i = 0; i < 2000; ++i) angles.push_back(14.3);
  const auto s = simulate_hwp_sweep(angles, 28.6, 2000.0, 200.0, 1.0, 4);
  double m = 0.0;
  for (const auto& x : s) m += x.counts;
  m /= double(s.size());
  CHECK(std::abs(m - 2200.0) < 4.0 * std::sqrt(2200.0 / 2000.0));
  // the excitation polarization scales brightness only
  const auto a = simulate_polarizer_sweep(angles, 29.9, 0.0, 28.6, 2000.0, 0.0, 4);
  const auto b = simulate_polarizer_sweep(angles, 29.9, 90.0, 28.6, 2000.0, 0.0, 4);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i].counts;
    mb += b[i].counts;
  }
  CHECK(ma / mb == doctest::Approx(absorption_response(0.0, 28.6) / absorption_response(45.0, 28.6)).epsilon(0.02));
}

TEST_CASE("radial integrals match the adaptive-quadrature oracle") {
  const OpticsConfig o;
  const int order = kernels::converged_quadrature_order(o, 1320.0);
  auto r = kernels::radial_integrals(o, 0.0, 0.0, order);
  check_close(r.i0, 7.426976884401196e-01, 0.0, 1e-10);
  check_close(r.i1, 0.0, 0.0, 1e-14);
  check_close(r.i2, 0.0, 0.0, 1e-14);
  r = kernels::radial_integrals(o, 500.0, 150.0, order);
  check_close(r.i0, 7.436736901906799e-02, -3.790112060893610e-01, 1e-10);
  check_close(r.i1, -4.426652403058946e-02, -7.879730594607273e-02, 1e-10);
  check_close(r.i2, -1.042761228515879e-02, -9.772248061652668e-03, 1e-10);
  r = kernels::radial_integrals(o, 1320.0, 900.0, order);
  check_close(r.i0, 4.591598084928532e-02, -7.896614847750487e-02, 1e-10);
  check_close(r.i1, -3.090374337243712e-02, -1.759108579564063e-02, 1e-10);
  check_close(r.i2, -9.543067709073722e-03, 7.203399548803178e-03, 1e-10);
}

TEST_CASE("point intensity matches the oracle") {
  const OpticsConfig o;
  const int order = kernels::converged_quadrature_order(o, 720.0);
  CHECK(kernels::dipole_intensity_at(o, 720.0, order, dipole_direction({40.0, 28.0}), 150.0, -250.0) ==
        doctest::Approx(3.046147117601954e-02).epsilon(1e-9));
  CHECK(kernels::dipole_intensity_at(o, 0.0, order, dipole_direction({90.0, 0.0}), 0.0, 0.0) ==
        doctest::Approx(5.515998564142970e-01).epsilon(1e-9));
  CHECK(kernels::dipole_intensity_at(o, 500.0, order, dipole_direction({0.0, 0.0}), 300.0, 100.0) ==
        doctest::Approx(2.655508323393144e-02).epsilon(1e-9));
}

TEST_CASE("optics validation") {
  OpticsConfig o;
  o.numerical_aperture = 1.6;
  CHECK_THROWS_AS(render_defocused_image({40.0, 28.0}, o, 500.0), ConfigError);
  o = {};
  o.grid_size = 40;
  CHECK_THROWS_AS(render_defocused_image({40.0, 28.0}, o, 500.0), ConfigError);
  o = {};
  CHECK_THROWS_AS(render_defocused_image({40.0, 28.0}, o, -1.0), ConfigError);
  CHECK_THROWS_AS(render_defocused_image({40.0, 28.0}, o, 6000.0), ConfigError);
}

TEST_CASE("rendered images: normalization, positivity, symmetry") {
  const OpticsConfig o;
  SUBCASE("in-focus energy is one") {
    for (double th : {0.0, 40.0, 90.0}) {
      const auto im = render_defocused_image({th, 28.0}, o, 0.0);
      CHECK(im.total() == doctest::Approx(1.0).epsilon(1e-12));
      for (double v : im.pixels) REQUIRE(v >= 0.0);
      CHECK(im.grid_size * o.pixel_pitch_nm >= 2000.0);
    }
  }
  SUBCASE("axial dipole is invariant under 90 degree rotation") {
    for (double dz : {0.0, 500.0, 1320.0}) {
      const auto im = render_defocused_image({0.0, 63.0}, o, dz);
      CHECK(max_rel_diff(im, im, [](int x, int y) { return std::pair{y, -x}; }) < 1e-6);
      const auto other = render_defocused_image({0.0, 0.0}, o, dz);
      CHECK(max_rel_diff(im, other, [](int x, int y) { return std::pair{x, y}; }) < 1e-12);
    }
  }
  SUBCASE("rotating the dipole by 90 degrees rotates the image") {
    for (double dz : {500.0, 720.0, 1320.0}) {
      const auto a = render_defocused_image({40.0, 28.0}, o, dz);
      const auto b = render_defocused_image({40.0, 118.0}, o, dz);
      CHECK(max_rel_diff(a, b, [](int x, int y) { return std::pair{y, -x}; }) < 1e-6);
    }
  }
  SUBCASE("antiparallel dipoles give the same image") {
    for (double dz : {0.0, 720.0}) {
      const auto a = render_defocused_image({40.0, 28.0}, o, dz);
      const auto b = render_defocused_image({140.0, 208.0}, o, dz);
      CHECK(max_rel_diff(a, b, [](int x, int y) { return std::pair{x, y}; }) < 1e-9);
    }
  }
  SUBCASE("mirror symmetry about the azimuth line on the grid") {
    const double dz = 720.0;
    CHECK(max_rel_diff(render_defocused_image({40.0, 0.0}, o, dz), render_defocused_image({40.0, 0.0}, o, dz),
                       [](int x, int y) { return std::pair{x, -y}; }) < 1e-9);
    CHECK(max_rel_diff(render_defocused_image({40.0, 45.0}, o, dz), render_defocused_image({40.0, 45.0}, o, dz),
                       [](int x, int y) { return std::pair{y, x}; }) < 1e-9);
    CHECK(max_rel_diff(render_defocused_image({40.0, 90.0}, o, dz), render_defocused_image({40.0, 90.0}, o, dz),
                       [](int x, int y) { return std::pair{-x, y}; }) < 1e-9);
    CHECK(max_rel_diff(render_defocused_image({40.0, 135.0}, o, dz), render_defocused_image({40.0, 135.0}, o, dz),
                       [](int x, int y) { return std::pair{-y, -x}; }) < 1e-9);
  }
  SUBCASE("mirror symmetry about an arbitrary azimuth") {
    const int order = kernels::converged_quadrature_order(o, 720.0);
    const auto p = dipole_direction({40.0, 28.0});
    const double u = std::cos(28.0 * kPi / 180.0), v = std::sin(28.0 * kPi / 180.0);
    double worst = 0.0, top = 0.0;
    for (double x = -900.0; x <= 900.0; x += 75.0)
      for (double y = -900.0; y <= 900.0; y += 75.0) {
        const double d = x * u + y * v;
        const double a = kernels::dipole_intensity_at(o, 720.0, order, p, x, y);
        const double b = kernels::dipole_intensity_at(o, 720.0, order, p, 2 * d * u - x, 2 * d * v - y);
        worst = std::max(worst, std::abs(a - b));
        top = std::max(top, a);
      }
    CHECK(worst / top < 1e-3);
    CHECK(worst / top < 1e-9);
  }
  SUBCASE("tilted dipole is not rotationally symmetric") {
    const auto a = render_defocused_image({40.0, 28.0}, o, 720.0);
    CHECK(max_rel_diff(a, a, [](int x, int y) { return std::pair{-x, -y}; }) > 1e-2);
  }
}

TEST_CASE("in-grid energy does not increase with defocus") {
  const OpticsConfig o;
  for (const DipoleOrientation d : {DipoleOrientation{0.0, 0.0}, DipoleOrientation{40.0, 28.0},
                                    DipoleOrientation{90.0, 10.0}}) {
    double prev = 2.0;
    for (double dz = 0.0; dz <= 2000.0; dz += 100.0) {
      const double e = render_defocused_image(d, o, dz).total();
      CHECK(e <= prev + 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("serial and OpenMP basis kernels agree exactly") {
  const OpticsConfig o;
  const int order = kernels::converged_quadrature_order(o, 1320.0);
  const auto a = kernels::defocus_basis_serial(o, 1320.0, order);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto b = kernels::defocus_basis_omp(o, 1320.0, order);
  omp_set_num_threads(saved);
  for (int k = 0; k < 6; ++k) CHECK(a.m[std::size_t(k)] == b.m[std::size_t(k)]);
}

TEST_CASE("orientation estimation") {
  const OpticsConfig o;
  std::vector<DefocusedImage> stack;
  for (double dz : {500.0, 720.0, 1320.0}) stack.push_back(render_defocused_image({40.0, 28.0}, o, dz));

  SUBCASE("noiseless stack") {
    const auto est = estimate_orientation(stack);
    MESSAGE("theta " << est.orientation.polar_deg << " phi " << est.orientation.azimuth_deg);
    CHECK(est.converged);
    CHECK(std::abs(est.orientation.polar_deg - 40.0) <= 0.5);
    CHECK(std::abs(est.orientation.azimuth_deg - 28.0) <= 0.5);
    CHECK_FALSE(est.azimuth_undetermined);
  }
  SUBCASE("global intensity scaling") {
    const auto base = estimate_orientation(stack);
    auto scaled = stack;
    for (auto& im : scaled)
      for (double& v : im.pixels) v *= 7.0;
    const auto est = estimate_orientation(scaled);
    CHECK(est.orientation.polar_deg == doctest::Approx(base.orientation.polar_deg).epsilon(1e-6));
    CHECK(est.orientation.azimuth_deg == doctest::Approx(base.orientation.azimuth_deg).epsilon(1e-6));
    CHECK(est.residual == doctest::Approx(49.0 * base.residual).epsilon(1e-3).scale(1e-20));
  }
  SUBCASE("noisy stack") {
    std::vector<DefocusedImage> noisy;
    for (std::size_t i = 0; i < stack.size(); ++i) noisy.push_back(add_pixel_noise(stack[i], 0.05, 10 + i));
    const auto est = estimate_orientation(noisy);
    CHECK(std::abs(est.orientation.polar_deg - 40.0) <= 3.0);
    CHECK(std::abs(est.orientation.azimuth_deg - 28.0) <= 2.0);
  }
  SUBCASE("axial dipole in focus has no azimuth") {
    const std::vector<DefocusedImage> one{render_defocused_image({0.0, 0.0}, o, 0.0)};
    const auto est = estimate_orientation(one);
    CHECK(est.azimuth_undetermined);
    CHECK(est.orientation.polar_deg < 2.0);
  }
  SUBCASE("all-zero image") {
    auto z = stack;
    std::fill(z[1].pixels.begin(), z[1].pixels.end(), 0.0);
    CHECK_THROWS_AS(estimate_orientation(z), EstimationError);
    CHECK_THROWS_AS(estimate_orientation(std::span<const DefocusedImage>{}), EstimationError);
  }
}

TEST_CASE("pixel noise is clipped and reproducible") {
  const auto im = render_defocused_image({40.0, 28.0}, OpticsConfig{}, 720.0);
  const auto a = add_pixel_noise(im, 0.05, 3);
  CHECK(a.pixels == add_pixel_noise(im, 0.05, 3).pixels);
  for (double v : a.pixels) REQUIRE(v >= 0.0);
  CHECK(a.pixels != im.pixels);
}

TEST_CASE("image files round trip") {
  const auto im = render_defocused_image({40.0, 28.0}, OpticsConfig{}, 720.0);
  const auto dir = std::filesystem::temp_directory_path() / "photonlab_test_img";
  std::filesystem::create_directories(dir);
  save_image(dir / "a.f64", im);
  CHECK(std::filesystem::file_size(dir / "a.f64") == im.pixels.size() * 8);
  const auto back = load_image(dir / "a.f64");
  CHECK(back.pixels == im.pixels);
  CHECK(back.grid_size == im.grid_size);
  CHECK(back.defocus_nm == 720.0);
  CHECK(back.optics.numerical_aperture == 1.3);
  REQUIRE(back.orientation.has_value());
  CHECK(back.orientation->polar_deg == 40.0);
  write_pgm(dir / "a.pgm", im);
  CHECK(std::filesystem::file_size(dir / "a.pgm") > std::uintmax_t(41 * 41));
  std::filesystem::resize_file(dir / "a.f64", 100);
  CHECK_THROWS_AS(load_image(dir / "a.f64"), FormatError);
  std::filesystem::remove_all(dir);
}
