#pragma once

#include <array>
#include <complex>
#include <vector>

#include "photonlab/emitter.hpp"
#include "photonlab/optics.hpp"

namespace photonlab::kernels {

// Radial integrals of the aplanatic dipole image, for one radius:
//   I_n(ρ) = ∫₀^ηmax √cosη · g_n(η) · J_n(k n ρ sinη) · exp(i k n δz cosη) dη
// with g₀ = sinη (1 + cosη), g₁ = sin²η, g₂ = sinη (1 − cosη).
struct RadialIntegrals {
  std::complex<double> i0, i1, i2;
};

RadialIntegrals radial_integrals(const OpticsConfig& optics, double defocus_nm, double rho_nm,
                                 int quadrature_order);

// Smallest power-of-two Gauss–Legendre order (≥ 32) for which doubling the
// order changes no radial integral on the pixel grid by more than 1e-10 of
// the largest one.
int converged_quadrature_order(const OpticsConfig& optics, double defocus_nm);

// Quadratic-form basis of the image: I = Σ_jk p_j p_k M_jk. The six stored
// images are M_xx, M_yy, M_zz, M_xy, M_xz, M_yz (row-major pixels).
struct DefocusBasis {
  int grid_size = 0;
  int quadrature_order = 0;
  std::array<std::vector<double>, 6> m;

  std::vector<double> image(const Direction3& p) const;
  // Writes the image into `out` (must be grid_size² long).
  void image_into(const Direction3& p, std::vector<double>& out) const;
};

DefocusBasis defocus_basis_serial(const OpticsConfig& optics, double defocus_nm,
                                  int quadrature_order);
DefocusBasis defocus_basis_omp(const OpticsConfig& optics, double defocus_nm,
                               int quadrature_order);

// Intensity at an arbitrary sample-plane point (x, y in nm).
double dipole_intensity_at(const OpticsConfig& optics, double defocus_nm, int quadrature_order,
                           const Direction3& p, double x_nm, double y_nm);

}  // namespace photonlab::kernels
