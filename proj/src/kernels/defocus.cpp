#include "photonlab/kernels/defocus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

#include "photonlab/units.hpp"

namespace photonlab::kernels {

namespace {

using cd = std::complex<double>;

struct Rule {
  std::vector<double> x, w;  // on [−1, 1]
};

const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Rule r;
  const auto zeros = boost::math::legendre_p_zeros<double>(n);  // non-negative half
  for (double z : zeros) {
    const double dp = boost::math::legendre_p_prime(n, z);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.x.push_back(z);
    r.w.push_back(w);
    if (z != 0.0) {
      r.x.push_back(-z);
      r.w.push_back(w);
    }
  }
  return cache.emplace(n, std::move(r)).first->second;
}

// Integrand samples that do not depend on ρ.
struct Nodes {
  std::vector<double> sin_eta;
  std::vector<cd> f0, f1, f2;  // weight · apodization · g_n · defocus phase
  double kn = 0.0;
};

Nodes make_nodes(const OpticsConfig& o, double defocus_nm, int order) {
  const auto& rule = gauss_legendre(order);
  const double eta_max = o.max_aperture_angle_rad();
  const double kn = 2.0 * units::kPi / o.emission_wavelength_nm * o.immersion_index;
  Nodes nd;
  nd.kn = kn;
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    const double eta = 0.5 * eta_max * (rule.x[q] + 1.0);
    const double w = 0.5 * eta_max * rule.w[q];
    const double c = std::cos(eta);
    const double s = std::sin(eta);
    const cd phase = std::polar(1.0, kn * defocus_nm * c);
    const double base = w * std::sqrt(c);
    nd.sin_eta.push_back(s);
    nd.f0.push_back(base * s * (1.0 + c) * phase);
    nd.f1.push_back(base * s * s * phase);
    nd.f2.push_back(base * s * (1.0 - c) * phase);
  }
  return nd;
}

RadialIntegrals integrate(const Nodes& nd, double rho_nm) {
  RadialIntegrals r{};
  for (std::size_t q = 0; q < nd.sin_eta.size(); ++q) {
    const double x = nd.kn * rho_nm * nd.sin_eta[q];
    const double j0 = std::cyl_bessel_j(0.0, x);
    const double j1 = std::cyl_bessel_j(1.0, x);
    const double j2 = x > 1e-8 ? 2.0 * j1 / x - j0 : x * x / 8.0;
    r.i0 += nd.f0[q] * j0;
    r.i1 += nd.f1[q] * j1;
    r.i2 += nd.f2[q] * j2;
  }
  return r;
}

// Pixels at integer offsets (dx, dy) share the radial integrals of
// s = dx² + dy², which keeps exact grid symmetries exact in the output.
std::vector<int> unique_radii_squared(int grid_size) {
  const int c = (grid_size - 1) / 2;
  std::vector<int> s;
  for (int dy = 0; dy <= c; ++dy)
    for (int dx = 0; dx <= dy; ++dx) s.push_back(dx * dx + dy * dy);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

std::vector<RadialIntegrals> radial_table(const OpticsConfig& o, const Nodes& nd,
                                          const std::vector<int>& radii2, bool parallel) {
  std::vector<RadialIntegrals> table(radii2.size());
  const auto n = std::ptrdiff_t(radii2.size());
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    table[std::size_t(i)] = integrate(nd, o.pixel_pitch_nm * std::sqrt(double(radii2[std::size_t(i)])));
  }
  return table;
}

// Basis entries for one pixel given its radial integrals and polar angle.
void pixel_basis(const RadialIntegrals& r, double cos_psi, double sin_psi, double out[6]) {
  const double c2 = cos_psi * cos_psi - sin_psi * sin_psi;
  const double s2 = 2.0 * sin_psi * cos_psi;
  const cd mi(0.0, -2.0);
  // Columns of the 2×3 field matrix (rows: output x, y polarization).
  const cd ax0 = r.i0 + r.i2 * c2, ax1 = r.i2 * s2;
  const cd ay0 = r.i2 * s2, ay1 = r.i0 - r.i2 * c2;
  const cd az0 = mi * r.i1 * cos_psi, az1 = mi * r.i1 * sin_psi;
  auto dot = [](cd a0, cd a1, cd b0, cd b1) {
    return (a0 * std::conj(b0) + a1 * std::conj(b1)).real();
  };
  out[0] = dot(ax0, ax1, ax0, ax1);
  out[1] = dot(ay0, ay1, ay0, ay1);
  out[2] = dot(az0, az1, az0, az1);
  out[3] = dot(ax0, ax1, ay0, ay1);
  out[4] = dot(ax0, ax1, az0, az1);
  out[5] = dot(ay0, ay1, az0, az1);
}

DefocusBasis build_basis(const OpticsConfig& o, double defocus_nm, int order, bool parallel) {
  const int G = o.grid_size;
  const int c = (G - 1) / 2;
  const auto nd = make_nodes(o, defocus_nm, order);
  const auto radii2 = unique_radii_squared(G);
  const auto table = radial_table(o, nd, radii2, parallel);

  DefocusBasis b;
  b.grid_size = G;
  b.quadrature_order = order;
  for (auto& m : b.m) m.assign(std::size_t(G) * std::size_t(G), 0.0);

#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      const int dx = j - c, dy = i - c;
      const int s = dx * dx + dy * dy;
      const auto idx = std::size_t(std::lower_bound(radii2.begin(), radii2.end(), s) - radii2.begin());
      const double rho = std::sqrt(double(s));
      const double cp = s == 0 ? 1.0 : dx / rho;
      const double sp = s == 0 ? 0.0 : dy / rho;
      double v[6];
      pixel_basis(table[idx], cp, sp, v);
      const auto p = std::size_t(i) * std::size_t(G) + std::size_t(j);
      for (int k = 0; k < 6; ++k) b.m[std::size_t(k)][p] = v[k];
    }
  }
  return b;
}

}  // namespace

RadialIntegrals radial_integrals(const OpticsConfig& optics, double defocus_nm, double rho_nm,
                                 int quadrature_order) {
  return integrate(make_nodes(optics, defocus_nm, quadrature_order), rho_nm);
}

int converged_quadrature_order(const OpticsConfig& optics, double defocus_nm) {
  const auto radii2 = unique_radii_squared(optics.grid_size);
  int order = 32;
  auto prev = radial_table(optics, make_nodes(optics, defocus_nm, order), radii2, true);
  while (order < 1024) {
    const auto next = radial_table(optics, make_nodes(optics, defocus_nm, 2 * order), radii2, true);
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      scale = std::max({scale, std::abs(next[i].i0), std::abs(next[i].i1), std::abs(next[i].i2)});
      diff = std::max({diff, std::abs(next[i].i0 - prev[i].i0), std::abs(next[i].i1 - prev[i].i1),
                       std::abs(next[i].i2 - prev[i].i2)});
    }
    if (diff <= 1e-10 * scale) return order;
    order *= 2;
    prev = next;
  }
  return order;
}

DefocusBasis defocus_basis_serial(const OpticsConfig& optics, double defocus_nm,
                                  int quadrature_order) {
  return build_basis(optics, defocus_nm, quadrature_order, false);
}

DefocusBasis defocus_basis_omp(const OpticsConfig& optics, double defocus_nm,
                               int quadrature_order) {
  return build_basis(optics, defocus_nm, quadrature_order, true);
}

void DefocusBasis::image_into(const Direction3& p, std::vector<double>& out) const {
  const double xx = p.x * p.x, yy = p.y * p.y, zz = p.z * p.z;
  const double xy = 2.0 * p.x * p.y, xz = 2.0 * p.x * p.z, yz = 2.0 * p.y * p.z;
  const std::size_t n = m[0].size();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = xx * m[0][i] + yy * m[1][i] + zz * m[2][i] + xy * m[3][i] +
                     xz * m[4][i] + yz * m[5][i];
    out[i] = std::max(v, 0.0);
  }
}

std::vector<double> DefocusBasis::image(const Direction3& p) const {
  std::vector<double> out;
  image_into(p, out);
  return out;
}

double dipole_intensity_at(const OpticsConfig& optics, double defocus_nm, int quadrature_order,
                           const Direction3& p, double x_nm, double y_nm) {
  const double rho = std::hypot(x_nm, y_nm);
  const auto r = radial_integrals(optics, defocus_nm, rho, quadrature_order);
  double v[6];
  pixel_basis(r, rho > 0 ? x_nm / rho : 1.0, rho > 0 ? y_nm / rho : 0.0, v);
  return p.x * p.x * v[0] + p.y * p.y * v[1] + p.z * p.z * v[2] +
         2.0 * (p.x * p.y * v[3] + p.x * p.z * v[4] + p.y * p.z * v[5]);
}

}  // namespace photonlab::kernels
