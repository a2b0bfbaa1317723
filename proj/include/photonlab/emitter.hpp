#pragma once

#include <vector>

namespace photonlab {

/// Orientation of a linear dipole transition.
///
/// `polar_deg` is measured from the optical (z) axis, `azimuth_deg` in the
/// sample plane from the lab reference axis (the sample x axis, which is the
/// "vertical" axis of the polarization measurements).
///
/// A dipole is a line, not a vector: (θ, φ) and (180°−θ, φ+180°) describe the
/// same transition. The canonical form keeps θ ∈ [0°, 90°] and φ ∈ [0°, 360°);
/// for in-plane dipoles (θ = 90°) φ is folded into [0°, 180°) and for axial
/// dipoles (θ = 0°) φ is set to 0.
struct DipoleOrientation {
  double polar_deg = 0.0;
  double azimuth_deg = 0.0;

  friend bool operator==(const DipoleOrientation&, const DipoleOrientation&) = default;
};

DipoleOrientation canonicalize(const DipoleOrientation& o);

// Unit direction vector (x, y, z) of the dipole axis.
struct Direction3 {
  double x, y, z;
};
Direction3 dipole_direction(const DipoleOrientation& o);

// Angle between two dipole lines in degrees, in [0, 90].
double line_angle_deg(const DipoleOrientation& a, const DipoleOrientation& b);

/// Ground-truth description of a single emitter.
struct Emitter {
  double center_wavelength_nm = 794.7;
  double fwhm_nm = 1.6;
  double excited_lifetime_ns = 1.5;
  DipoleOrientation dipole{40.0, 28.0};
  double detected_rate_cps = 1.0e5;  // mean detected flux under CW excitation
  double signal_fraction = 1.0;      // emitter share of detected counts

  // Throws ConfigError naming the violated invariant.
  void validate() const;
};

struct LorentzianLine {
  double center_nm = 0.0;
  double fwhm_nm = 1.0;
  double amplitude = 1.0;
  double offset = 0.0;

  void validate() const;
};

// λ₀² / (2π Δλ), returned in micrometres.
double coherence_length_um(double center_wavelength_nm, double fwhm_nm);

// l_coh / c, returned in picoseconds.
double coherence_time_ps(double coherence_length_um);

// 2 τ_exc / τ_coh. Both arguments in the same time unit.
double time_bandwidth_ratio(double excited_lifetime, double coherence_time);

double lorentzian_value(const LorentzianLine& line, double wavelength_nm);

}  // namespace photonlab
