#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "photonlab/emitter.hpp"
#include "photonlab/optics.hpp"

namespace photonlab {

// --- Polarization response -------------------------------------------------

// Relative excitation of an in-plane absorption dipole when a half-wave plate
// at `hwp_angle_deg` rotates linear excitation by twice its angle.
// `contrast` < 1 mixes in an unpolarized share (the mean stays 1/2).
double absorption_response(double hwp_angle_deg, double dipole_azimuth_deg,
                           double contrast = 1.0);

// Malus-law transmission of a polarizer at `polarizer_angle_deg` for light
// emitted by a dipole at `emission_azimuth_deg`.
double emission_polarizer_response(double polarizer_angle_deg, double emission_azimuth_deg);

struct PolarizationSample {
  double angle_deg;
  double counts;
};

// Poisson-noisy sweep of counts = background + peak · response(angle).
std::vector<PolarizationSample> simulate_hwp_sweep(std::span<const double> hwp_angles_deg,
                                                   double dipole_azimuth_deg, double peak_counts,
                                                   double background_counts, double contrast,
                                                   std::uint64_t seed);

// The excitation polarization sets the brightness through absorption_response
// but never the emitted polarization.
std::vector<PolarizationSample> simulate_polarizer_sweep(
    std::span<const double> polarizer_angles_deg, double emission_azimuth_deg,
    double excitation_polarization_deg, double absorption_azimuth_deg, double peak_counts,
    double background_counts, std::uint64_t seed);

// --- Defocused imaging ----------------------------------------------------

struct DefocusedImage {
  int grid_size = 0;
  std::vector<double> pixels;  // row-major, row = y, column = x
  double defocus_nm = 0.0;
  OpticsConfig optics;
  std::optional<DipoleOrientation> orientation;  // set for synthetic images

  double& at(int row, int col) { return pixels[std::size_t(row) * std::size_t(grid_size) + std::size_t(col)]; }
  double at(int row, int col) const { return pixels[std::size_t(row) * std::size_t(grid_size) + std::size_t(col)]; }
  double total() const;
};

inline constexpr double kMaxDefocusNm = 5000.0;

// Defocused image of a dipole in a homogeneous medium of the immersion index,
// scaled so the in-grid energy of the same dipole in focus is 1.
DefocusedImage render_defocused_image(const DipoleOrientation& orientation,
                                      const OpticsConfig& optics, double defocus_nm);

// Adds N(0, σ) to each pixel with σ = relative_sigma · (peak pixel), then
// clips at zero so the image stays a valid intensity.
DefocusedImage add_pixel_noise(const DefocusedImage& image, double relative_sigma,
                               std::uint64_t seed);

struct OrientationOptions {
  double search_step_deg = 2.0;
  bool refine_defocus = false;       // also refine each plane's δz (±20 %)
  double flat_azimuth_threshold = 1e-3;
};

struct OrientationEstimate {
  DipoleOrientation orientation;
  double residual = 0.0;               // mean squared pixel residual
  std::vector<double> defocus_refined;  // nm, one per plane
  std::vector<double> scales;          // per-plane intensity scale
  std::vector<double> backgrounds;     // per-plane background
  bool azimuth_undetermined = false;   // residual flat in φ (near-axial dipole)
  bool converged = false;
  int iterations = 0;
};

// Grid search over the dipole hemisphere followed by least-squares refinement
// of (θ, φ, per-plane scale and background).
OrientationEstimate estimate_orientation(std::span<const DefocusedImage> stack,
                                         const OrientationOptions& options = {});

// Image I/O: flat little-endian float64 grid plus a JSON sidecar
// (path + ".json"); optional 8-bit PGM preview.
void save_image(const std::filesystem::path& path, const DefocusedImage& image);
DefocusedImage load_image(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const DefocusedImage& image);
nlohmann::json image_sidecar(const DefocusedImage& image);

}  // namespace photonlab
