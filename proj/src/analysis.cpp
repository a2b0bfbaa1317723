#include "photonlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "photonlab/config.hpp"
#include "photonlab/csv.hpp"
#include "photonlab/error.hpp"
#include "photonlab/random.hpp"
#include "photonlab/units.hpp"

namespace photonlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const auto mid = v.begin() + std::ptrdiff_t(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

double wrap_angle_deg(double d, double period) {
  double w = std::fmod(d, period);
  if (w > 0.5 * period) w -= period;
  if (w <= -0.5 * period) w += period;
  return w;
}

namespace model {

double lorentzian(double x, std::span<const double> p) {
  return lorentzian_value({p[0], p[1], p[2], p[3]}, x);
}

double fringe(double x, std::span<const double> p, double wavelength_nm) {
  const double k = 2.0 * units::kPi / wavelength_nm;
  return p[0] + p[1] * std::cos(k * x) + p[2] * std::sin(k * x);
}

double fringe_segment(double x, std::span<const double> p, double wavelength_nm, double center_nm) {
  const double k = 2.0 * units::kPi / wavelength_nm;
  const double u = (std::abs(x) - std::abs(center_nm)) / wavelength_nm;
  return p[0] + (p[1] + p[3] * u) * std::cos(k * x) + (p[2] + p[4] * u) * std::sin(k * x);
}

double visibility(double x, std::span<const double> p) { return p[1] * std::exp(-p[0] * x); }

namespace {
// Mean of exp(−|τ|/a) over [lo, hi].
double mean_exp_abs(double lo, double hi, double a) {
  const double w = hi - lo;
  if (lo >= 0.0) return a * (std::exp(-lo / a) - std::exp(-hi / a)) / w;
  if (hi <= 0.0) return a * (std::exp(hi / a) - std::exp(lo / a)) / w;
  return a * (2.0 - std::exp(lo / a) - std::exp(-hi / a)) / w;
}
}  // namespace

double g2_dip(double tau, std::span<const double> p, double w) {
  return p[2] * (1.0 - p[0] * mean_exp_abs(tau - 0.5 * w, tau + 0.5 * w, p[1]));
}

double decay(double t, std::span<const double> p) { return p[1] * std::exp(-t / p[0]) + p[2]; }

double harmonic(double x, std::span<const double> p, double m) {
  const double a = m * units::deg_to_rad(x);
  return p[0] + p[1] * std::cos(a) + p[2] * std::sin(a);
}

}  // namespace model

// --- Spectrum --------------------------------------------------------------

Spectrum simulate_spectrum(const Emitter& emitter, std::span<const double> wavelengths_nm,
                           double peak_counts, double offset_counts, std::uint64_t seed) {
  emitter.validate();
  const LorentzianLine line{emitter.center_wavelength_nm, emitter.fwhm_nm, peak_counts,
                            offset_counts};
  auto rng = make_rng(seed, 0x53504543ULL);
  Spectrum s;
  for (double w : wavelengths_nm) {
    s.samples.push_back({w, double(poisson(rng, lorentzian_value(line, w)))});
  }
  s.provenance = {{"producer", "simulate_spectrum"},
                  {"seed", seed},
                  {"emitter", emitter},
                  {"peak_counts", peak_counts},
                  {"offset_counts", offset_counts}};
  return s;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  csv::Table t;
  t.provenance = s.provenance;
  t.provenance["integration_time_s"] = s.integration_time_s;
  t.columns = {"wavelength_nm", "counts"};
  for (const auto& x : s.samples) t.rows.push_back({x.wavelength_nm, x.counts});
  csv::write(out, t);
}

Spectrum read_spectrum_csv(std::istream& in) {
  auto t = csv::read(in, {"wavelength_nm", "counts"}, "spectrum");
  Spectrum s;
  s.integration_time_s = t.provenance.value("integration_time_s", 1.0);
  t.provenance.erase("integration_time_s");
  s.provenance = t.provenance;
  for (const auto& r : t.rows) {
    if (!s.samples.empty() && !(r[0] > s.samples.back().wavelength_nm)) {
      throw FormatError("spectrum: wavelengths must be strictly increasing");
    }
    if (r[1] < 0.0) throw FormatError("spectrum: negative counts");
    s.samples.push_back({r[0], r[1]});
  }
  return s;
}

namespace {

// Count data: a first pass with σ = √max(y, 1), then reweighting with the
// fitted model, since data-derived weights pull low-count fits downward.
FitResult fit_counts(const ScalarModel& f, CurveData d, const std::vector<FitParameter>& params,
                     std::vector<double> initial) {
  d.sigma = poisson_sigma(d.y);
  auto r = least_squares_fit(f, d, params, std::move(initial));
  for (int pass = 0; pass < 3; ++pass) {
    for (std::size_t i = 0; i < d.x.size(); ++i) d.sigma[i] = std::sqrt(std::max(f(d.x[i], r.values), 1e-2));
    r = least_squares_fit(f, d, params, r.values);
  }
  return r;
}

}  // namespace

FitResult fit_lorentzian(const Spectrum& spectrum) {
  const auto& smp = spectrum.samples;
  if (smp.size() < 8) throw UsageError("fit_lorentzian: need at least 8 samples");
  CurveData d;
  for (const auto& s : smp) {
    d.x.push_back(s.wavelength_nm);
    d.y.push_back(s.counts);
  }
  d.sigma = poisson_sigma(d.y);

  const auto imax = std::size_t(std::max_element(d.y.begin(), d.y.end()) - d.y.begin());
  const double ymax = d.y[imax];
  const double ymin = *std::min_element(d.y.begin(), d.y.end());
  const double half = ymin + 0.5 * (ymax - ymin);
  // Half-maximum crossings by linear interpolation.
  double left = d.x.front(), right = d.x.back();
  for (std::size_t i = imax; i > 0; --i) {
    if (d.y[i - 1] <= half) {
      left = d.x[i - 1] + (half - d.y[i - 1]) / (d.y[i] - d.y[i - 1]) * (d.x[i] - d.x[i - 1]);
      break;
    }
  }
  for (std::size_t i = imax; i + 1 < d.y.size(); ++i) {
    if (d.y[i + 1] <= half) {
      right = d.x[i] + (d.y[i] - half) / (d.y[i] - d.y[i + 1]) * (d.x[i + 1] - d.x[i]);
      break;
    }
  }
  const double span = d.x.back() - d.x.front();
  double fwhm0 = right - left;
  if (!(fwhm0 > 0.0)) fwhm0 = span / 4.0;
  if (!(span > 2.0 * fwhm0)) {
    throw UsageError("fit_lorentzian: spectrum must span more than twice the line width guess");
  }

  auto r = fit_counts(model::lorentzian, d,
                      {{"center_nm", "nm"},
                       {"fwhm_nm", "nm", 1e-9 * span, 10.0 * span},
                       {"amplitude", "counts"},
                       {"offset", "counts"}},
                      {d.x[imax], fwhm0, ymax - ymin, ymin});
  // Flag lines whose half-maximum points are not both inside the scan.
  const double c = r.value("center_nm"), hw = 0.5 * std::abs(r.value("fwhm_nm"));
  if (imax == 0 || imax + 1 == d.y.size() || c - hw <= d.x.front() || c + hw >= d.x.back()) {
    r.flags.push_back("peak_at_edge");
  }
  if (!(r.value("amplitude") > 3.0 * r.error("amplitude"))) r.flags.push_back("no_significant_peak");
  return r;
}

std::pair<double, double> coherence_length_from_fit(const FitResult& fit) {
  const double lam = fit.value("center_nm");
  const double dl = fit.value("fwhm_nm");
  const double l_um = coherence_length_um(lam, dl);
  Eigen::Vector2d g(2.0 * l_um / lam, -l_um / dl);
  const Eigen::Matrix2d c = fit.covariance.topLeftCorner(2, 2);
  return {l_um, std::sqrt(std::max(0.0, double(g.transpose() * c * g)))};
}

// --- Envelope ----------------------------------------------------------------

namespace {

struct Segment {
  std::size_t first, last;  // [first, last)
};

std::vector<Segment> segment_interferogram(const Interferogram& ig, double lambda) {
  const auto& s = ig.samples;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < s.size(); ++i) gaps.push_back(s[i].opd_nm - s[i - 1].opd_nm);
  const double spacing = median(gaps);
  if (!(spacing > 0.0) || !(spacing < lambda / 2.0)) {
    throw EstimationError("extract_envelope: sampling does not resolve fringes (median OPD step " +
                          std::to_string(spacing) + " nm vs lambda/2 = " +
                          std::to_string(lambda / 2.0) + " nm)");
  }
  const double max_len = 2.5 * lambda;
  std::vector<Segment> segs;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    const bool end = i == s.size() || s[i].opd_nm - s[i - 1].opd_nm > 3.0 * spacing ||
                     s[i].opd_nm - s[start].opd_nm > max_len;
    if (end) {
      segs.push_back({start, i});
      start = i;
    }
  }
  return segs;
}

struct SegmentFit {
  bool ok = false;
  double center = 0, v = 0, v_err = 0, phase = 0, phase_err = 0;
};

SegmentFit fit_segment(const Interferogram& ig, const Segment& seg, double lambda) {
  SegmentFit out;
  if (seg.last - seg.first < 8) return out;
  CurveData d;
  for (std::size_t i = seg.first; i < seg.last; ++i) {
    d.x.push_back(ig.samples[i].opd_nm);
    d.y.push_back(ig.samples[i].intensity);
  }
  d.sigma = poisson_sigma(d.y);
  const double x0 = 0.5 * (d.x.front() + d.x.back());
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / double(d.y.size());
  // The envelope may change across the segment; its slope in |Δ| is fitted
  // so that V refers to the segment center.
  auto f = [lambda, x0](double x, std::span<const double> p) {
    return model::fringe_segment(x, p, lambda, x0);
  };
  FitResult r;
  try {
    r = least_squares_fit(f, d, {{"a", ""}, {"b", ""}, {"c", ""}, {"b_slope", ""}, {"c_slope", ""}},
                          {mean, 0.0, 0.0, 0.0, 0.0});
  } catch (const EstimationError&) {
    return out;
  }
  const double a = r.values[0], b = r.values[1], c = r.values[2];
  if (!(a > 0.0) || !std::isfinite(b) || !std::isfinite(c)) return out;
  const double B = std::hypot(b, c);
  const Eigen::Matrix3d C = r.covariance.topLeftCorner(3, 3);
  out.center = x0;
  out.v = B / a;
  // Gradient of V = √(b² + c²) / a with respect to (a, b, c).
  Eigen::Vector3d g(-B / (a * a), B > 0 ? b / (B * a) : 1.0 / a, B > 0 ? c / (B * a) : 0.0);
  out.v_err = std::sqrt(std::max(0.0, double(g.transpose() * C * g)));
  out.phase = std::atan2(-c, b);
  if (B > 0) {
    Eigen::Vector3d gp(0.0, c / (B * B), -b / (B * B));
    out.phase_err = std::sqrt(std::max(0.0, double(gp.transpose() * C * gp)));
  }
  out.ok = std::isfinite(out.v) && std::isfinite(out.v_err);
  return out;
}

}  // namespace

Envelope extract_envelope(const Interferogram& ig, double wavelength_hint_nm) {
  if (!(wavelength_hint_nm > 0.0)) throw UsageError("extract_envelope: wavelength hint must be > 0");
  if (ig.samples.size() < 5) throw EstimationError("extract_envelope: too few samples");
  const auto segs = segment_interferogram(ig, wavelength_hint_nm);

  double lambda = wavelength_hint_nm;
  std::vector<SegmentFit> fits;
  for (int pass = 0; pass < 3; ++pass) {
    fits.clear();
    for (const auto& s : segs) fits.push_back(fit_segment(ig, s, lambda));
    // Carrier phase drifts linearly with OPD when λ is off: φ₀ = 2πΔ(1/λ_true − 1/λ).
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    double prev = 0.0;
    bool first = true;
    for (const auto& f : fits) {
      if (!f.ok || !(f.phase_err > 0.0) || f.v < 5.0 * f.v_err) continue;
      double ph = f.phase;
      if (!first) ph = prev + wrap_angle_deg(units::rad_to_deg(ph - prev), 360.0) * units::kPi / 180.0;
      prev = ph;
      first = false;
      const double w = 1.0 / (f.phase_err * f.phase_err);
      sw += w;
      sx += w * f.center;
      sy += w * ph;
      sxx += w * f.center * f.center;
      sxy += w * f.center * ph;
    }
    const double det = sw * sxx - sx * sx;
    if (!(sw > 0.0) || !(det > 0.0)) break;
    const double slope = (sw * sxy - sx * sy) / det;
    const double inv = 1.0 / lambda + slope / (2.0 * units::kPi);
    const double next = std::clamp(1.0 / inv, 0.98 * wavelength_hint_nm, 1.02 * wavelength_hint_nm);
    if (std::abs(next - lambda) < 1e-9 * lambda) break;
    lambda = next;
  }

  Envelope env;
  env.carrier_wavelength_nm = lambda;
  for (const auto& f : fits) {
    if (!f.ok) {
      ++env.dropped_segments;
      continue;
    }
    env.points.push_back({f.center, f.v, f.v_err, f.phase});
  }
  if (env.points.size() < 3) {
    throw EstimationError("extract_envelope: only " + std::to_string(env.points.size()) +
                          " usable segments (" + std::to_string(env.dropped_segments) +
                          " dropped)");
  }
  return env;
}

Envelope extract_envelope_peaks(const Interferogram& ig, double wavelength_hint_nm) {
  if (ig.samples.size() < 5) throw EstimationError("extract_envelope_peaks: too few samples");
  const auto segs = segment_interferogram(ig, wavelength_hint_nm);
  Envelope env;
  env.carrier_wavelength_nm = wavelength_hint_nm;
  for (const auto& s : segs) {
    if (s.last - s.first < 5) {
      ++env.dropped_segments;
      continue;
    }
    std::size_t imin = s.first, imax = s.first;
    for (std::size_t i = s.first; i < s.last; ++i) {
      if (ig.samples[i].intensity < ig.samples[imin].intensity) imin = i;
      if (ig.samples[i].intensity > ig.samples[imax].intensity) imax = i;
    }
    // Three-point parabolic vertex around each sampled extreme.
    auto vertex = [&](std::size_t i) {
      const double y1 = ig.samples[i].intensity;
      if (i == s.first || i + 1 == s.last) return y1;
      const double y0 = ig.samples[i - 1].intensity, y2 = ig.samples[i + 1].intensity;
      const double curv = y2 - 2.0 * y1 + y0;
      return curv == 0.0 ? y1 : y1 - (y2 - y0) * (y2 - y0) / (8.0 * curv);
    };
    const double lo = std::max(0.0, vertex(imin)), hi = vertex(imax);
    if (!(hi + lo > 0.0)) {
      ++env.dropped_segments;
      continue;
    }
    const double center = 0.5 * (ig.samples[s.first].opd_nm + ig.samples[s.last - 1].opd_nm);
    env.points.push_back({center, (hi - lo) / (hi + lo), std::sqrt(hi + lo) / (hi + lo), kNaN});
  }
  if (env.points.size() < 3) throw EstimationError("extract_envelope_peaks: fewer than 3 segments");
  return env;
}

FitResult fit_coherence_length(std::span<const EnvelopePoint> envelope) {
  if (envelope.size() < 2) throw UsageError("fit_coherence_length: need at least 2 envelope points");
  CurveData d;
  for (const auto& p : envelope) {
    d.x.push_back(std::abs(p.opd_nm) / units::kNmPerUm);
    d.y.push_back(p.visibility);
    d.sigma.push_back(p.visibility_error > 0.0 ? p.visibility_error : 1.0);
  }
  // Initial decay rate from a log-linear regression.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    if (!(d.y[i] > 0.0)) continue;
    const double ly = std::log(d.y[i]);
    sx += d.x[i];
    sy += ly;
    sxx += d.x[i] * d.x[i];
    sxy += d.x[i] * ly;
    n += 1;
  }
  const double xmax = *std::max_element(d.x.begin(), d.x.end());
  double gamma0 = 1.0 / std::max(xmax, 1e-6);
  double v0 = *std::max_element(d.y.begin(), d.y.end());
  if (n >= 2 && n * sxx - sx * sx > 0.0) {
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (slope < 0.0) gamma0 = -slope;
    v0 = std::exp((sy - slope * sx) / n);
  }
  auto r = least_squares_fit(model::visibility, d, {{"gamma", "1/um", 0.0}, {"V0", "", 0.0}}, {gamma0, v0});

  const double g = r.values[0], sg = r.standard_errors[0];
  FitResult out = r;
  out.names.clear();
  out.units.clear();
  out.values.clear();
  out.standard_errors.clear();
  out.flags.clear();
  if (g > 0.0) {
    const double l = 1.0 / g;
    const double sl = sg / (g * g);
    out.set("l_coh_um", "um", l, sl);
    out.set("V0", "", r.values[1], r.standard_errors[1]);
    out.set("tau_coh_ps", "ps", coherence_time_ps(l), sl / units::kSpeedOfLight_um_per_ps);
  } else {
    out.set("l_coh_um", "um", kInf, kNaN);
    out.set("V0", "", r.values[1], r.standard_errors[1]);
    out.set("tau_coh_ps", "ps", kInf, kNaN);
    out.flags.push_back("bound_hit:l_coh_um");
    out.converged = false;
  }
  if (!r.converged) out.flags.push_back("not_converged");
  return out;
}

// --- g2 ------------------------------------------------------------------------

FitResult fit_g2_dip(const CorrelationHistogram& hist) {
  const auto& b = hist.bins;
  if (b.size() < 11) throw UsageError("fit_g2_dip: need at least 11 bins");
  const double w = double(hist.bin_width_ps);
  CurveData d;
  for (const auto& x : b) {
    d.x.push_back(x.tau_ps);
    d.y.push_back(x.g2);
    const double per_count = x.expected > 0.0 ? 1.0 / x.expected : 1.0;
    d.sigma.push_back(std::sqrt(std::max(double(x.raw), 1.0)) * per_count);
  }
  const double tmax = std::max(std::abs(d.x.front()), std::abs(d.x.back()));
  std::vector<double> outer;
  for (std::size_t i = 0; i < d.x.size(); ++i)
    if (std::abs(d.x[i]) > 0.6 * tmax) outer.push_back(d.y[i]);
  double base0 = outer.empty() ? 1.0
                               : std::accumulate(outer.begin(), outer.end(), 0.0) / double(outer.size());
  if (!(base0 > 0.0)) base0 = 1.0;
  const std::size_t zero = b.size() / 2;
  const double depth = base0 - d.y[zero];
  double c0 = depth / base0;
  if (std::abs(c0) < 0.05) c0 = 0.05;
  double tau0 = tmax / 10.0;
  for (std::size_t i = zero + 1; i < b.size(); ++i) {
    if (base0 - d.y[i] < depth / std::exp(1.0)) {
      tau0 = d.x[i];
      break;
    }
  }
  tau0 = std::max(tau0, w);

  auto f = [w](double x, std::span<const double> p) { return model::g2_dip(x, p, w); };
  auto r = least_squares_fit(f, d,
                             {{"contrast", ""},
                              {"antibunching_time_ps", "ps", w / 20.0, 10.0 * tmax},
                              {"baseline", "", 0.0}},
                             {c0, tau0, base0});
  if (5.0 * r.value("antibunching_time_ps") > tmax) r.flags.push_back("dip_at_edge");
  return r;
}

// --- Lifetime ------------------------------------------------------------------

std::vector<DecayBin> to_decay_bins(std::span<const TcspcBin> bins) {
  std::vector<DecayBin> out;
  out.reserve(bins.size());
  for (const auto& b : bins) out.push_back({b.delay_ps, double(b.counts)});
  return out;
}

void write_decay_csv(std::ostream& out, std::span<const DecayBin> bins,
                     const nlohmann::json& provenance) {
  csv::Table t;
  t.provenance = provenance;
  t.columns = {"t_ps", "counts"};
  for (const auto& b : bins) t.rows.push_back({b.t_ps, b.counts});
  csv::write(out, t);
}

std::vector<DecayBin> read_decay_csv(std::istream& in) {
  auto t = csv::read(in, {"t_ps", "counts"}, "lifetime histogram");
  std::vector<DecayBin> out;
  for (const auto& r : t.rows) out.push_back({r[0], r[1]});
  return out;
}

FitResult fit_lifetime(std::span<const DecayBin> histogram, double fit_window_start_ps) {
  CurveData d;
  for (const auto& b : histogram) {
    if (b.t_ps < fit_window_start_ps) continue;
    d.x.push_back(b.t_ps / units::kPsPerNs);
    d.y.push_back(b.counts);
  }
  if (d.x.size() < 10) {
    throw UsageError("fit_lifetime: fit window starting at " + std::to_string(fit_window_start_ps) +
                     " ps leaves " + std::to_string(d.x.size()) + " bins (need >= 10)");
  }
  d.sigma = poisson_sigma(d.y);

  const std::size_t n = d.y.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 4);
  const double b0 = std::accumulate(d.y.end() - std::ptrdiff_t(tail), d.y.end(), 0.0) / double(tail);
  double tau0 = 1.0;
  {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double thresh = std::max(5.0, 3.0 * std::sqrt(b0 + 1.0));
    for (std::size_t i = 0; i < n; ++i) {
      const double s = d.y[i] - b0;
      if (s <= thresh) continue;
      const double wgt = s;  // ∝ 1/var(log s)
      const double ly = std::log(s);
      sw += wgt;
      sx += wgt * d.x[i];
      sy += wgt * ly;
      sxx += wgt * d.x[i] * d.x[i];
      sxy += wgt * d.x[i] * ly;
    }
    const double det = sw * sxx - sx * sx;
    if (det > 0.0) {
      const double slope = (sw * sxy - sx * sy) / det;
      if (slope < 0.0) tau0 = -1.0 / slope;
    }
  }
  tau0 = std::clamp(tau0, 1e-2, 1e2);
  double a0 = (d.y.front() - b0) * std::exp(d.x.front() / tau0);
  a0 = std::max(a0, 3.0 * std::sqrt(b0 + 1.0));

  const std::vector<FitParameter> params{
      {"tau_ns", "ns", 1e-3, 1e3}, {"amplitude", "counts"}, {"background", "counts"}};
  return fit_counts(model::decay, d, params, {tau0, a0, b0});
}

// --- Polarization --------------------------------------------------------------

FitResult fit_polarization(std::span<const PolarizationSample> samples, PolarizationMode mode) {
  const bool hwp = mode == PolarizationMode::HwpAbsorption;
  const double period = hwp ? 90.0 : 180.0;
  const double harmonic = hwp ? 4.0 : 2.0;
  if (samples.size() < 4) throw UsageError("fit_polarization: need at least 4 samples");
  CurveData d;
  for (const auto& s : samples) {
    d.x.push_back(s.angle_deg);
    d.y.push_back(s.counts);
  }
  d.sigma = poisson_sigma(d.y);
  std::vector<double> sorted = d.x;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> steps;
  for (std::size_t i = 1; i < sorted.size(); ++i) steps.push_back(sorted[i] - sorted[i - 1]);
  if (sorted.back() - sorted.front() + median(steps) < period - 1e-9) {
    throw UsageError("fit_polarization: samples must cover one full response period (" +
                     std::to_string(int(period)) + " deg)");
  }

  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / double(d.y.size());
  auto f = [harmonic](double x, std::span<const double> p) { return model::harmonic(x, p, harmonic); };
  auto lin = fit_counts(f, d, {{"offset", "counts"}, {"b", "counts"}, {"c", "counts"}}, {mean, 0.0, 0.0});
  const double b = lin.values[1], c = lin.values[2];
  const double B = std::hypot(b, c);
  const auto& C = lin.covariance;
  double var_b = C(1, 1), var_c = C(2, 2), cov = C(1, 2);
  const double sB = B > 0 ? std::sqrt(std::max(0.0, (b * b * var_b + c * c * var_c + 2 * b * c * cov) / (B * B)))
                          : std::sqrt(0.5 * (var_b + var_c));
  const double s2phi = B > 0 ? std::sqrt(std::max(0.0, (b * b * var_c + c * c * var_b - 2 * b * c * cov))) / (B * B)
                             : kNaN;

  FitResult out = lin;
  out.names.clear();
  out.units.clear();
  out.values.clear();
  out.standard_errors.clear();
  const bool polarized = B > 3.0 * sB;
  const double two_phi = units::rad_to_deg(std::atan2(c, b));  // (−180, 180]
  double azimuth = std::fmod(0.5 * two_phi + 180.0, 180.0);
  const double az_err = units::rad_to_deg(0.5 * s2phi);
  double phase = hwp ? 0.5 * azimuth : azimuth;
  const double phase_err = hwp ? 0.5 * az_err : az_err;
  if (!polarized) {
    azimuth = kNaN;
    phase = kNaN;
    out.flags.push_back("unpolarized");
  }
  out.set("phase_deg", "deg", phase, polarized ? phase_err : kNaN);
  out.set("amplitude", "counts", B, sB);
  out.set("offset", "counts", lin.values[0], lin.standard_errors[0]);
  out.set("dipole_azimuth_deg", "deg", azimuth, polarized ? az_err : kNaN);
  return out;
}

void write_polarization_csv(std::ostream& out, std::span<const PolarizationSample> samples,
                            PolarizationMode mode, const nlohmann::json& provenance) {
  csv::Table t;
  t.provenance = provenance;
  t.provenance["mode"] = mode == PolarizationMode::HwpAbsorption ? "hwp_absorption" : "polarizer_emission";
  t.columns = {"angle_deg", "counts"};
  for (const auto& s : samples) t.rows.push_back({s.angle_deg, s.counts});
  csv::write(out, t);
}

std::pair<std::vector<PolarizationSample>, PolarizationMode> read_polarization_csv(std::istream& in) {
  auto t = csv::read(in, {"angle_deg", "counts"}, "polarization sweep");
  const auto mode = t.provenance.value("mode", std::string{});
  PolarizationMode m;
  if (mode == "hwp_absorption") {
    m = PolarizationMode::HwpAbsorption;
  } else if (mode == "polarizer_emission") {
    m = PolarizationMode::PolarizerEmission;
  } else {
    throw FormatError("polarization sweep: provenance must name mode hwp_absorption or polarizer_emission");
  }
  std::vector<PolarizationSample> s;
  for (const auto& r : t.rows) s.push_back({r[0], r[1]});
  return {s, m};
}

}  // namespace photonlab
