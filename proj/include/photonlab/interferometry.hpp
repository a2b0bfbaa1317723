#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "photonlab/emitter.hpp"

namespace photonlab {

// A retroreflector moved by d changes the optical path difference by 2d.
inline constexpr double kMirrorToOpd = 2.0;

// Step-and-scan sampling: the motor visits `n_motor_steps` positions spaced
// `motor_step_um` apart and centered on `center_mirror_um`; at each one the
// piezo sweeps ±piezo_span/2 in steps of `piezo_sample_spacing_nm`. All
// positions are mirror displacements.
struct ScanProtocol {
  double motor_step_um = 5.0;
  double piezo_span_um = 0.8;
  double piezo_sample_spacing_nm = 40.0;
  int n_motor_steps = 39;
  double dwell_time_s = 0.2;
  double mirror_displacement_to_opd_factor = kMirrorToOpd;
  double center_mirror_um = 0.0;
  double phase_drift_rad_per_sample = 0.0;

  // Needs the emitter wavelength for the fringe-resolution check.
  void validate(double center_wavelength_nm) const;
  int samples_per_segment() const;
};

struct InterferogramSample {
  double opd_nm;
  double intensity;

  friend bool operator==(const InterferogramSample&, const InterferogramSample&) = default;
};

struct Interferogram {
  std::vector<InterferogramSample> samples;  // sorted by opd
  nlohmann::json metadata = nlohmann::json::object();
};

// Envelope of first-order coherence for the Lorentzian line:
// exp(−|opd| / l_coh) with l_coh = λ₀² / (2π Δλ).
double analytic_visibility(const Emitter& emitter, double opd_nm);

// Mean counts I₀·[1 + V cos(2π Δ / λ₀)], I₀ = detected_rate · dwell / 2.
double interferogram_mean(const Emitter& emitter, double opd_nm, double dwell_time_s);

Interferogram analytic_interferogram(const Emitter& emitter, std::span<const double> opds_nm,
                                     double dwell_time_s);

// Mirror positions (nm) in acquisition order.
std::vector<double> scan_mirror_positions_nm(const ScanProtocol& protocol);

// Shot-noise-limited step-and-scan acquisition.
Interferogram simulate_michelson_scan(const Emitter& emitter, const ScanProtocol& protocol,
                                      std::uint64_t noise_seed);

// Largest OPD gap (nm) between consecutive sorted samples.
double max_opd_gap_nm(const Interferogram& ig);

// CSV: `#`-prefixed provenance lines, then `opd_nm,intensity_counts`.
void write_interferogram_csv(std::ostream& out, const Interferogram& ig);
Interferogram read_interferogram_csv(std::istream& in);

}  // namespace photonlab
