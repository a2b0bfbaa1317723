#pragma once

// Unit conventions used throughout photonlab:
//   lengths      nm   (coherence lengths are reported in um)
//   times        ps   (lifetimes and rates at the API edge use ns)
//   angles       degrees at the API boundary, radians internally
#include <numbers>

namespace photonlab::units {

inline constexpr double kPi = std::numbers::pi;

// CODATA exact speed of light.
inline constexpr double kSpeedOfLight_m_per_s = 299792458.0;
inline constexpr double kSpeedOfLight_um_per_ps = kSpeedOfLight_m_per_s * 1e-6;
inline constexpr double kSpeedOfLight_nm_per_ps = kSpeedOfLight_m_per_s * 1e-3;

inline constexpr double kNmPerUm = 1e3;
inline constexpr double kPsPerNs = 1e3;
inline constexpr double kPsPerS = 1e12;
inline constexpr double kNsPerS = 1e9;

// FWHM of a Gaussian in units of its standard deviation, as used for pulse widths.
inline constexpr double kFwhmPerSigma = 2.355;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace photonlab::units
