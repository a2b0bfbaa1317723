#include "photonlab/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "photonlab/error.hpp"
#include "photonlab/units.hpp"

namespace photonlab {

using units::deg_to_rad;
using units::rad_to_deg;

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

Direction3 dipole_direction(const DipoleOrientation& o) {
  const double th = deg_to_rad(o.polar_deg);
  const double ph = deg_to_rad(o.azimuth_deg);
  return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

DipoleOrientation canonicalize(const DipoleOrientation& o) {
  // Work from the angles rather than the direction vector so that values
  // already in range come back bit-identical.
  double th = std::fmod(o.polar_deg, 360.0);
  if (th < 0.0) th += 360.0;
  double ph = o.azimuth_deg;
  // θ ∈ (180, 360) is the same vector as (360 − θ, φ + 180).
  if (th > 180.0) {
    th = 360.0 - th;
    ph += 180.0;
  }
  // Line identity: (θ, φ) ~ (180 − θ, φ + 180).
  if (th > 90.0) {
    th = 180.0 - th;
    ph += 180.0;
  }
  ph = std::fmod(ph, 360.0);
  if (ph < 0.0) ph += 360.0;
  if (ph >= 360.0) ph -= 360.0;
  if (th == 90.0 && ph >= 180.0) ph -= 180.0;
  if (th == 0.0) ph = 0.0;
  return {th, ph};
}

double line_angle_deg(const DipoleOrientation& a, const DipoleOrientation& b) {
  const auto u = dipole_direction(a);
  const auto v = dipole_direction(b);
  // atan2 of |u × v| and |u · v| stays accurate for nearly parallel lines.
  const double cx = u.y * v.z - u.z * v.y, cy = u.z * v.x - u.x * v.z, cz = u.x * v.y - u.y * v.x;
  const double dot = std::abs(u.x * v.x + u.y * v.y + u.z * v.z);
  return rad_to_deg(std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot));
}

void Emitter::validate() const {
  if (!(center_wavelength_nm > 0.0)) throw ConfigError("emitter.center_wavelength_nm must be > 0");
  if (!(fwhm_nm > 0.0)) throw ConfigError("emitter.fwhm_nm must be > 0");
  if (!(fwhm_nm < center_wavelength_nm)) {
    throw ConfigError("emitter.fwhm_nm must be smaller than center_wavelength_nm");
  }
  if (!(excited_lifetime_ns > 0.0)) throw ConfigError("emitter.excited_lifetime_ns must be > 0");
  if (!(detected_rate_cps > 0.0)) throw ConfigError("emitter.detected_rate_cps must be > 0");
  if (!(signal_fraction > 0.0 && signal_fraction <= 1.0)) {
    throw ConfigError("emitter.signal_fraction must lie in (0, 1]");
  }
}

void LorentzianLine::validate() const {
  if (!(fwhm_nm > 0.0)) throw ConfigError("lorentzian fwhm must be > 0");
  if (!(amplitude > 0.0)) throw ConfigError("lorentzian amplitude must be > 0");
  if (!(offset >= 0.0)) throw ConfigError("lorentzian offset must be >= 0");
}

double coherence_length_um(double center_wavelength_nm, double fwhm_nm) {
  require_positive(center_wavelength_nm, "center wavelength");
  require_positive(fwhm_nm, "linewidth");
  const double l_nm =
      center_wavelength_nm * center_wavelength_nm / (2.0 * units::kPi * fwhm_nm);
  return l_nm / units::kNmPerUm;
}

double coherence_time_ps(double coherence_length_um) {
  require_positive(coherence_length_um, "coherence length");
  return coherence_length_um / units::kSpeedOfLight_um_per_ps;
}

double time_bandwidth_ratio(double excited_lifetime, double coherence_time) {
  require_positive(excited_lifetime, "excited-state lifetime");
  require_positive(coherence_time, "coherence time");
  return 2.0 * excited_lifetime / coherence_time;
}

double lorentzian_value(const LorentzianLine& line, double wavelength_nm) {
  const double hw = 0.5 * line.fwhm_nm;
  const double d = wavelength_nm - line.center_nm;
  return line.offset + line.amplitude * (hw * hw) / (d * d + hw * hw);
}

}  // namespace photonlab
