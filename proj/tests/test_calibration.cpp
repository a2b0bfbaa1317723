#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "photonlab/analysis.hpp"
#include "photonlab/dipole.hpp"

using namespace photonlab;

// Round-trip calibration: simulate with known truth, fit, and count how often
// every parameter lands within three reported standard errors.

namespace {

constexpr int kTrials = 100;

std::vector<double> grid(double a, double b, double step) {
  std::vector<double> v;
  for (int i = 0; a + i * step <= b + 1e-9; ++i) v.push_back(a + i * step);
  return v;
}

bool within(const FitResult& f, const std::string& name, double truth) {
  return std::abs(f.value(name) - truth) <= 3.0 * f.error(name);
}

}  // namespace

TEST_CASE("Lorentzian spectrum") {
  Emitter e;
  const auto w = grid(784.7, 804.7, 0.05);
  int ok = 0;
  for (int s = 0; s < kTrials; ++s) {
    const auto f = fit_lorentzian(simulate_spectrum(e, w, 5000.0, 50.0, std::uint64_t(s)));
    ok += f.converged && within(f, "center_nm", 794.7) && within(f, "fwhm_nm", 1.6) &&
          within(f, "amplitude", 5000.0) && within(f, "offset", 50.0);
  }
  MESSAGE("spectrum: " << ok << "/100");
  CHECK(ok >= 95);
}

TEST_CASE("coherence length from simulated scans") {
  Emitter e;
  const double l = coherence_length_um(794.7, 1.6);
  int ok = 0;
  for (int s = 0; s < kTrials; ++s) {
    const auto ig = simulate_michelson_scan(e, ScanProtocol{}, std::uint64_t(s));
    const auto f = fit_coherence_length(extract_envelope(ig, 794.7).points);
    ok += f.converged && within(f, "l_coh_um", l) && within(f, "V0", 1.0);
  }
  MESSAGE("coherence length: " << ok << "/100");
  CHECK(ok >= 95);
}

TEST_CASE("g2 dip") {
  Emitter e;
  e.signal_fraction = 0.806;
  const std::vector<Emitter> one{e};
  ExcitationConfig x;
  x.cw_excitation_rate_per_ns = 0.2;
  const double tau_a = 1000.0 / (0.2 + 1.0 / 1.5);
  int ok = 0;
  for (int s = 0; s < kTrials; ++s) {
    const auto st = simulate_hbt_stream(one, x, {}, 2'000'000'000ULL, std::uint64_t(s));
    const auto f = fit_g2_dip(compute_g2(st, 256, 20000));
    ok += f.converged && within(f, "contrast", 0.806 * 0.806) && within(f, "antibunching_time_ps", tau_a) &&
          within(f, "baseline", 1.0);
  }
  MESSAGE("g2: " << ok << "/100");
  CHECK(ok >= 95);
}

TEST_CASE("lifetime") {
  Emitter e;
  ExcitationConfig x;
  x.mode = ExcitationMode::Pulsed;
  x.pulse_excitation_prob = 0.1;
  int ok = 0;
  for (int s = 0; s < kTrials; ++s) {
    const auto st = simulate_pulsed_stream(e, x, {}, 100'000, std::uint64_t(s));
    const auto bins = to_decay_bins(tcspc_histogram(st, 50000.0, 2000.0, 50.0, 2000.0));
    const auto f = fit_lifetime(bins);
    ok += f.converged && within(f, "tau_ns", 1.5) && within(f, "background", 0.0);
  }
  MESSAGE("lifetime: " << ok << "/100");
  CHECK(ok >= 95);
}

TEST_CASE("polarization") {
  int hwp = 0, pol = 0;
  for (int s = 0; s < kTrials; ++s) {
    const auto a = simulate_hwp_sweep(grid(0, 180, 5), 28.6, 2000.0, 200.0, 1.0, std::uint64_t(s));
    const auto fa = fit_polarization(a, PolarizationMode::HwpAbsorption);
    hwp += fa.converged && within(fa, "phase_deg", 14.3) && within(fa, "dipole_azimuth_deg", 28.6) &&
           within(fa, "amplitude", 1000.0) && within(fa, "offset", 1200.0);
    const auto b = simulate_polarizer_sweep(grid(0, 355, 5), 29.9, 0.0, 28.6, 2000.0, 200.0, std::uint64_t(s));
    const auto fb = fit_polarization(b, PolarizationMode::PolarizerEmission);
    const double peak = 2000.0 * absorption_response(0.0, 28.6);
    pol += fb.converged && within(fb, "dipole_azimuth_deg", 29.9) && within(fb, "amplitude", peak / 2.0) &&
           within(fb, "offset", 200.0 + peak / 2.0);
  }
  MESSAGE("HWP: " << hwp << "/100, polarizer: " << pol << "/100");
  CHECK(hwp >= 95);
  CHECK(pol >= 95);
}

TEST_CASE("dipole orientation from noisy defocused stacks") {
  const OpticsConfig o;
  std::vector<DefocusedImage> clean;
  for (double dz : {500.0, 720.0, 1320.0}) clean.push_back(render_defocused_image({40.0, 28.0}, o, dz));
  double worst_t = 0.0, worst_p = 0.0;
  int ok = 0;
  for (int s = 0; s < kTrials; ++s) {
    std::vector<DefocusedImage> noisy;
    for (std::size_t k = 0; k < clean.size(); ++k)
      noisy.push_back(add_pixel_noise(clean[k], 0.05, std::uint64_t(1000 * s) + k));
    const auto est = estimate_orientation(noisy);
    const double dt = std::abs(est.orientation.polar_deg - 40.0);
    const double dp = std::abs(wrap_angle_deg(est.orientation.azimuth_deg - 28.0, 360.0));
    worst_t = std::max(worst_t, dt);
    worst_p = std::max(worst_p, dp);
    ok += dt <= 3.0 && dp <= 2.0;
  }
  MESSAGE("orientation: " << ok << "/100 within (3, 2) deg; worst |dtheta| " << worst_t << ", |dphi| " << worst_p);
  CHECK(ok == kTrials);
}
