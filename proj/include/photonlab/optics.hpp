#pragma once

namespace photonlab {

// Wide-field imaging optics. Pixel pitch is referred to the sample plane.
struct OpticsConfig {
  double numerical_aperture = 1.3;
  double immersion_index = 1.518;
  double emission_wavelength_nm = 794.7;
  double magnification = 100.0;
  double pixel_pitch_nm = 50.0;
  int grid_size = 41;

  void validate() const;
  double max_aperture_angle_rad() const;
  double field_of_view_nm() const { return pixel_pitch_nm * grid_size; }
};

}  // namespace photonlab
