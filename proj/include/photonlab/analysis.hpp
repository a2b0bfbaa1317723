#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "photonlab/correlation.hpp"
#include "photonlab/dipole.hpp"
#include "photonlab/emitter.hpp"
#include "photonlab/interferometry.hpp"
#include "photonlab/lsq.hpp"
#include "photonlab/photostream.hpp"

namespace photonlab {

// Model functions behind the fits, exposed for derivative checks.
namespace model {
// p = (center_nm, fwhm_nm, amplitude, offset)
double lorentzian(double wavelength_nm, std::span<const double> p);
// p = (a, b, c): a + b cos(kx) + c sin(kx), k = 2π / wavelength
double fringe(double opd_nm, std::span<const double> p, double wavelength_nm);
// p = (a, b, c, b', c'): fringe whose quadrature amplitudes change linearly
// in u = (|x| − |center|) / wavelength, i.e. (b + b'u) cos(kx) + (c + c'u) sin(kx)
double fringe_segment(double opd_nm, std::span<const double> p, double wavelength_nm,
                      double center_nm);
// p = (decay rate 1/μm, V0)
double visibility(double opd_um, std::span<const double> p);
// p = (contrast, τ_a ps, baseline), averaged over [τ − w/2, τ + w/2]
double g2_dip(double tau_ps, std::span<const double> p, double bin_width_ps);
// p = (τ ns, amplitude, background)
double decay(double t_ns, std::span<const double> p);
// p = (offset, b, c): offset + b cos(mθ) + c sin(mθ)
double harmonic(double angle_deg, std::span<const double> p, double m);
}  // namespace model

// --- Spectrum --------------------------------------------------------------

struct SpectrumSample {
  double wavelength_nm;
  double counts;
};

struct Spectrum {
  std::vector<SpectrumSample> samples;  // strictly increasing wavelength
  double integration_time_s = 1.0;
  nlohmann::json provenance = nlohmann::json::object();
};

// Poisson-noisy Lorentzian line of the emitter sampled on `wavelengths_nm`.
Spectrum simulate_spectrum(const Emitter& emitter, std::span<const double> wavelengths_nm,
                           double peak_counts, double offset_counts, std::uint64_t seed);

void write_spectrum_csv(std::ostream& out, const Spectrum& s);
Spectrum read_spectrum_csv(std::istream& in);

// Parameters: center_nm, fwhm_nm, amplitude, offset.
// Flags: "peak_at_edge", "no_significant_peak".
FitResult fit_lorentzian(const Spectrum& spectrum);

// Eq.-1 coherence length from a Lorentzian fit with first-order error
// propagation; returns {value_um, error_um}.
std::pair<double, double> coherence_length_from_fit(const FitResult& lorentzian);

// --- Interferogram envelope ------------------------------------------------

struct EnvelopePoint {
  double opd_nm;
  double visibility;
  double visibility_error;
  double carrier_phase_rad;  // φ₀ of I = A(1 + V cos(2πΔ/λ + φ₀))
};

struct Envelope {
  std::vector<EnvelopePoint> points;
  int dropped_segments = 0;
  double carrier_wavelength_nm = 0.0;  // shared λ after refinement
};

// Splits the interferogram into piezo segments (gaps in OPD or ≈2-fringe
// windows of contiguous data) and fits each with a fixed-wavelength sinusoid.
Envelope extract_envelope(const Interferogram& ig, double wavelength_hint_nm);

// Cross-check: (max − min) / (max + min) per segment.
Envelope extract_envelope_peaks(const Interferogram& ig, double wavelength_hint_nm);

// Fits V(Δ) = V₀ exp(−|Δ| / l_coh). Parameters: l_coh_um, V0; derived
// tau_coh_ps. A decay rate pinned at zero is reported as l_coh = +inf with
// the flag "bound_hit:l_coh_um".
FitResult fit_coherence_length(std::span<const EnvelopePoint> envelope);

// --- g2 --------------------------------------------------------------------

// g2(τ) = baseline · (1 − C exp(−|τ|/τ_a)), averaged over each bin.
// Parameters: contrast, antibunching_time_ps, baseline. Flag: "dip_at_edge".
FitResult fit_g2_dip(const CorrelationHistogram& hist);

// --- Lifetime --------------------------------------------------------------

struct DecayBin {
  double t_ps;
  double counts;
};

std::vector<DecayBin> to_decay_bins(std::span<const TcspcBin> bins);
void write_decay_csv(std::ostream& out, std::span<const DecayBin> bins, const nlohmann::json& provenance);
std::vector<DecayBin> read_decay_csv(std::istream& in);

// Default start of the lifetime fit window after the excitation pulse.
inline constexpr double kDefaultLifetimeWindowPs = 500.0;

// counts = A exp(−t/τ) + B on t ≥ window start, Poisson weights.
// Parameters: tau_ns, amplitude, background.
FitResult fit_lifetime(std::span<const DecayBin> histogram,
                       double fit_window_start_ps = kDefaultLifetimeWindowPs);

// --- Polarization ----------------------------------------------------------

enum class PolarizationMode { HwpAbsorption, PolarizerEmission };

// HWP: A + B cos(4α − 2φ); polarizer: A + B cos(2β − 2φ). Parameters:
// phase_deg, amplitude, offset, dipole_azimuth_deg (∈ [0, 180)). If B is not
// significant (< 3σ) the flag "unpolarized" replaces the azimuth (NaN).
FitResult fit_polarization(std::span<const PolarizationSample> samples, PolarizationMode mode);

void write_polarization_csv(std::ostream& out, std::span<const PolarizationSample> samples,
                            PolarizationMode mode, const nlohmann::json& provenance);
std::pair<std::vector<PolarizationSample>, PolarizationMode> read_polarization_csv(std::istream& in);

// Wraps an angle difference into (−period/2, period/2].
double wrap_angle_deg(double d, double period);

}  // namespace photonlab
