#include "photonlab/plots.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "photonlab/svg_plot.hpp"
#include "photonlab/units.hpp"

namespace photonlab::plots {

namespace {

constexpr const char* kFitColor = "#d62728";

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[std::size_t(i)] = a + (b - a) * i / (n - 1);
  return v;
}

svg::Series fit_curve(double a, double b, auto&& f, std::string label) {
  svg::Series s;
  s.x = linspace(a, b, 400);
  for (double x : s.x) s.y.push_back(f(x));
  s.style = svg::Style::Line;
  s.color = kFitColor;
  s.label = std::move(label);
  return s;
}

}  // namespace

std::string spectrum(const Spectrum& sp, const FitResult& fit) {
  svg::Plot p{"Emission spectrum", "wavelength (nm)", "counts", {}};
  svg::Series d;
  for (const auto& s : sp.samples) {
    d.x.push_back(s.wavelength_nm);
    d.y.push_back(s.counts);
  }
  d.label = "data";
  p.series.push_back(d);
  if (fit.has("center_nm") && !sp.samples.empty()) {
    const LorentzianLine line{fit.value("center_nm"), fit.value("fwhm_nm"), fit.value("amplitude"),
                              fit.value("offset")};
    p.series.push_back(fit_curve(d.x.front(), d.x.back(),
                                 [&](double x) { return lorentzian_value(line, x); },
                                 fmt::format("Lorentzian, FWHM {:.3f} nm", line.fwhm_nm)));
  }
  return svg::render(p);
}

std::string envelope(const Envelope& env, const FitResult& fit) {
  svg::Plot p{"Fringe visibility", "OPD (um)", "visibility", {}};
  svg::Series d;
  for (const auto& e : env.points) {
    d.x.push_back(e.opd_nm / units::kNmPerUm);
    d.y.push_back(e.visibility);
  }
  d.label = "segments";
  p.series.push_back(d);
  if (fit.has("l_coh_um") && std::isfinite(fit.value("l_coh_um")) && !d.x.empty()) {
    const double l = fit.value("l_coh_um"), v0 = fit.value("V0");
    const auto [lo, hi] = std::minmax_element(d.x.begin(), d.x.end());
    p.series.push_back(fit_curve(*lo, *hi, [&](double x) { return v0 * std::exp(-std::abs(x) / l); },
                                 fmt::format("exp fit, l_coh {:.1f} um", l)));
  }
  return svg::render(p);
}

std::string interferogram(const Interferogram& ig) {
  svg::Plot p{"Interferogram", "OPD (um)", "counts", {}};
  svg::Series d;
  for (const auto& s : ig.samples) {
    d.x.push_back(s.opd_nm / units::kNmPerUm);
    d.y.push_back(s.intensity);
  }
  p.series.push_back(d);
  return svg::render(p);
}

std::string g2(const CorrelationHistogram& h, const FitResult& fit) {
  svg::Plot p{"Intensity correlation", "delay (ns)", "g2", {}};
  svg::Series d;
  for (const auto& b : h.bins) {
    d.x.push_back(b.tau_ps / units::kPsPerNs);
    d.y.push_back(b.g2);
  }
  d.label = "data";
  p.series.push_back(d);
  if (fit.has("contrast") && !d.x.empty()) {
    const double c = fit.value("contrast"), a = fit.value("antibunching_time_ps") / units::kPsPerNs,
                 base = fit.value("baseline");
    p.series.push_back(fit_curve(d.x.front(), d.x.back(),
                                 [&](double t) { return base * (1.0 - c * std::exp(-std::abs(t) / a)); },
                                 fmt::format("fit, contrast {:.3f}", c)));
  }
  return svg::render(p);
}

std::string decay(std::span<const DecayBin> bins, const FitResult& fit, double window_start_ps) {
  svg::Plot p{"Fluorescence decay", "delay (ns)", "counts", {}};
  svg::Series d;
  for (const auto& b : bins) {
    d.x.push_back(b.t_ps / units::kPsPerNs);
    d.y.push_back(b.counts);
  }
  d.label = "data";
  p.series.push_back(d);
  if (fit.has("tau_ns") && !d.x.empty()) {
    const double tau = fit.value("tau_ns"), a = fit.value("amplitude"), b = fit.value("background");
    p.series.push_back(fit_curve(window_start_ps / units::kPsPerNs, d.x.back(),
                                 [&](double t) { return a * std::exp(-t / tau) + b; },
                                 fmt::format("fit, tau {:.3f} ns", tau)));
  }
  return svg::render(p);
}

std::string polarization(std::span<const PolarizationSample> samples, PolarizationMode mode,
                         const FitResult& fit, const std::string& title) {
  const bool hwp = mode == PolarizationMode::HwpAbsorption;
  svg::Plot p{title, hwp ? "half-wave plate angle (deg)" : "polarizer angle (deg)", "counts", {}};
  svg::Series d;
  for (const auto& s : samples) {
    d.x.push_back(s.angle_deg);
    d.y.push_back(s.counts);
  }
  d.label = "data";
  p.series.push_back(d);
  if (fit.has("dipole_azimuth_deg") && std::isfinite(fit.value("dipole_azimuth_deg")) && !d.x.empty()) {
    const double az = units::deg_to_rad(fit.value("dipole_azimuth_deg"));
    const double a = fit.value("offset"), b = fit.value("amplitude");
    const double m = hwp ? 4.0 : 2.0;
    const auto [lo, hi] = std::minmax_element(d.x.begin(), d.x.end());
    p.series.push_back(fit_curve(*lo, *hi,
                                 [&](double x) { return a + b * std::cos(m * units::deg_to_rad(x) - 2.0 * az); },
                                 fmt::format("fit, phase {:.1f} deg", fit.value("phase_deg"))));
  }
  return svg::render(p);
}

std::string image_stack(std::span<const DefocusedImage> stack, const std::string& title) {
  std::vector<std::vector<double>> images;
  std::vector<std::string> captions;
  for (const auto& im : stack) {
    images.push_back(im.pixels);
    captions.push_back(fmt::format("dz = {:g} nm", im.defocus_nm));
  }
  return svg::render_images(images, stack.empty() ? 0 : stack.front().grid_size, captions, title);
}

}  // namespace photonlab::plots
