#include "photonlab/dipole.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "photonlab/config.hpp"
#include "photonlab/error.hpp"
#include "photonlab/kernels/defocus.hpp"
#include "photonlab/lsq.hpp"
#include "photonlab/random.hpp"
#include "photonlab/units.hpp"

namespace photonlab {

using units::deg_to_rad;

void OpticsConfig::validate() const {
  if (!(immersion_index > 0.0)) throw ConfigError("optics.immersion_index must be > 0");
  if (!(numerical_aperture > 0.0 && numerical_aperture < immersion_index)) {
    throw ConfigError("optics.numerical_aperture must satisfy 0 < NA < immersion_index (NA = " +
                      std::to_string(numerical_aperture) + ", n = " +
                      std::to_string(immersion_index) + ")");
  }
  if (!(emission_wavelength_nm > 0.0)) throw ConfigError("optics.emission_wavelength_nm must be > 0");
  if (!(magnification > 0.0)) throw ConfigError("optics.magnification must be > 0");
  if (!(pixel_pitch_nm > 0.0)) throw ConfigError("optics.pixel_pitch_nm must be > 0");
  if (grid_size < 1 || grid_size % 2 == 0) throw ConfigError("optics.grid_size must be odd and positive");
}

double OpticsConfig::max_aperture_angle_rad() const {
  return std::asin(numerical_aperture / immersion_index);
}

double absorption_response(double hwp_angle_deg, double dipole_azimuth_deg, double contrast) {
  const double c = std::cos(2.0 * deg_to_rad(hwp_angle_deg) - deg_to_rad(dipole_azimuth_deg));
  return contrast * c * c + 0.5 * (1.0 - contrast);
}

double emission_polarizer_response(double polarizer_angle_deg, double emission_azimuth_deg) {
  const double c = std::cos(deg_to_rad(polarizer_angle_deg) - deg_to_rad(emission_azimuth_deg));
  return c * c;
}

std::vector<PolarizationSample> simulate_hwp_sweep(std::span<const double> angles,
                                                   double dipole_azimuth_deg, double peak_counts,
                                                   double background_counts, double contrast,
                                                   std::uint64_t seed) {
  auto rng = make_rng(seed, 0x485750ULL);
  std::vector<PolarizationSample> out;
  for (double a : angles) {
    const double mean =
        background_counts + peak_counts * absorption_response(a, dipole_azimuth_deg, contrast);
    out.push_back({a, double(poisson(rng, mean))});
  }
  return out;
}

std::vector<PolarizationSample> simulate_polarizer_sweep(std::span<const double> angles,
                                                         double emission_azimuth_deg,
                                                         double excitation_polarization_deg,
                                                         double absorption_azimuth_deg,
                                                         double peak_counts,
                                                         double background_counts,
                                                         std::uint64_t seed) {
  auto rng = make_rng(seed, 0x504f4cULL);
  // Excitation polarization angle = 2 × HWP angle.
  const double brightness =
      absorption_response(0.5 * excitation_polarization_deg, absorption_azimuth_deg);
  std::vector<PolarizationSample> out;
  for (double b : angles) {
    const double mean = background_counts + peak_counts * brightness *
                                                emission_polarizer_response(b, emission_azimuth_deg);
    out.push_back({b, double(poisson(rng, mean))});
  }
  return out;
}

double DefocusedImage::total() const {
  return std::accumulate(pixels.begin(), pixels.end(), 0.0);
}

namespace {

double image_sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void check_defocus(double defocus_nm) {
  if (!(defocus_nm >= 0.0 && defocus_nm <= kMaxDefocusNm)) {
    throw ConfigError("defocus must lie in [0, 5000] nm");
  }
}

}  // namespace

DefocusedImage render_defocused_image(const DipoleOrientation& orientation,
                                      const OpticsConfig& optics, double defocus_nm) {
  optics.validate();
  check_defocus(defocus_nm);
  const auto p = dipole_direction(orientation);
  const int order = std::max(kernels::converged_quadrature_order(optics, defocus_nm),
                             kernels::converged_quadrature_order(optics, 0.0));
  const auto basis = kernels::defocus_basis_omp(optics, defocus_nm, order);
  const auto focus = defocus_nm == 0.0 ? basis : kernels::defocus_basis_omp(optics, 0.0, order);

  DefocusedImage img;
  img.grid_size = optics.grid_size;
  img.defocus_nm = defocus_nm;
  img.optics = optics;
  img.orientation = orientation;
  img.pixels = basis.image(p);
  const double norm = image_sum(focus.image(p));
  if (norm > 0.0) {
    for (double& v : img.pixels) v /= norm;
  }
  return img;
}

DefocusedImage add_pixel_noise(const DefocusedImage& image, double relative_sigma,
                               std::uint64_t seed) {
  DefocusedImage out = image;
  const double peak = *std::max_element(image.pixels.begin(), image.pixels.end());
  const double sigma = relative_sigma * peak;
  auto rng = make_rng(seed, 0x4e4f495345ULL);
  for (double& v : out.pixels) v = std::max(0.0, v + normal(rng, 0.0, sigma));
  return out;
}

namespace {

struct PlaneFit {
  double scale, background, sse;
};

// Best scale/background for one plane by linear least squares.
PlaneFit fit_plane(const std::vector<double>& model, const std::vector<double>& data) {
  double srr = 0, sr = 0, srm = 0, sm = 0, smm = 0;
  const double n = double(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    srr += model[i] * model[i];
    sr += model[i];
    srm += model[i] * data[i];
    sm += data[i];
    smm += data[i] * data[i];
  }
  const double det = srr * n - sr * sr;
  double a = 0.0, b = sm / n;
  if (det > 1e-300 * std::max(1.0, srr * n)) {
    a = (srm * n - sr * sm) / det;
    b = (srr * sm - sr * srm) / det;
  }
  const double sse = std::max(0.0, smm - a * srm - b * sm);
  return {a, b, sse};
}

void validate_stack(std::span<const DefocusedImage> stack) {
  if (stack.empty()) throw EstimationError("estimate_orientation: empty image stack");
  const auto& o = stack.front().optics;
  o.validate();
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const auto& im = stack[k];
    const auto& q = im.optics;
    if (q.grid_size != o.grid_size || q.pixel_pitch_nm != o.pixel_pitch_nm ||
        q.numerical_aperture != o.numerical_aperture || q.immersion_index != o.immersion_index ||
        q.emission_wavelength_nm != o.emission_wavelength_nm) {
      throw UsageError("estimate_orientation: images do not share optics");
    }
    if (im.pixels.size() != std::size_t(o.grid_size) * std::size_t(o.grid_size)) {
      throw UsageError("estimate_orientation: pixel count does not match grid size");
    }
    check_defocus(im.defocus_nm);
    bool any = false;
    for (double v : im.pixels) {
      if (!std::isfinite(v) || v < 0.0) {
        throw EstimationError("estimate_orientation: image " + std::to_string(k) +
                              " has negative or non-finite pixels");
      }
      any = any || v > 0.0;
    }
    if (!any) {
      throw EstimationError("estimate_orientation: image " + std::to_string(k) + " is all zero");
    }
  }
}

}  // namespace

OrientationEstimate estimate_orientation(std::span<const DefocusedImage> stack,
                                         const OrientationOptions& options) {
  validate_stack(stack);
  if (!(options.search_step_deg > 0.0 && options.search_step_deg <= 45.0)) {
    throw ConfigError("estimate_orientation: search step must lie in (0, 45] degrees");
  }
  const auto& optics = stack.front().optics;
  const std::size_t planes = stack.size();
  const std::size_t npix = stack.front().pixels.size();

  std::vector<int> orders(planes);
  std::vector<kernels::DefocusBasis> bases;
  for (std::size_t k = 0; k < planes; ++k) {
    orders[k] = kernels::converged_quadrature_order(optics, stack[k].defocus_nm);
    bases.push_back(kernels::defocus_basis_omp(optics, stack[k].defocus_nm, orders[k]));
  }
  double data_energy = 0.0;
  for (const auto& im : stack)
    for (double v : im.pixels) data_energy += v * v;
  const double norm = 1.0 / double(npix * planes);

  // Coarse grid over the hemisphere θ ∈ [0, 90], φ ∈ [0, 360).
  const double step = options.search_step_deg;
  const int n_theta = int(std::floor(90.0 / step + 1e-9)) + 1;
  const int n_phi = std::max(1, int(std::ceil(360.0 / step - 1e-9)));
  std::vector<double> grid(std::size_t(n_theta) * std::size_t(n_phi));

#pragma omp parallel
  {
    std::vector<double> model;
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t c = 0; c < std::ptrdiff_t(grid.size()); ++c) {
      const int it = int(c / n_phi), ip = int(c % n_phi);
      const auto p = dipole_direction({double(it) * step, double(ip) * step});
      double sse = 0.0;
      for (std::size_t k = 0; k < planes; ++k) {
        bases[k].image_into(p, model);
        sse += fit_plane(model, stack[k].pixels).sse;
      }
      grid[std::size_t(c)] = sse * norm;
    }
  }
  const auto best = std::size_t(std::min_element(grid.begin(), grid.end()) - grid.begin());
  const int bt = int(best) / n_phi, bp = int(best) % n_phi;

  OrientationEstimate est;
  {
    const auto row = grid.begin() + std::ptrdiff_t(bt) * n_phi;
    const auto [lo, hi] = std::minmax_element(row, row + n_phi);
    est.azimuth_undetermined =
        (*hi - *lo) <= options.flat_azimuth_threshold * data_energy * norm;
  }

  // Local refinement of (θ, φ, scale_k, background_k).
  const double theta0 = double(bt) * step, phi0 = double(bp) * step;
  LeastSquaresProblem prob;
  prob.n_residuals = npix * planes;
  prob.parameters = {{"theta", "deg"}, {"phi", "deg"}};
  prob.initial = {theta0, phi0};
  {
    const auto p = dipole_direction({theta0, phi0});
    std::vector<double> model;
    for (std::size_t k = 0; k < planes; ++k) {
      bases[k].image_into(p, model);
      const auto f = fit_plane(model, stack[k].pixels);
      prob.parameters.push_back({"scale_" + std::to_string(k), ""});
      prob.parameters.push_back({"background_" + std::to_string(k), ""});
      prob.initial.push_back(f.scale);
      prob.initial.push_back(f.background);
    }
  }
  const double rnorm = 1.0 / std::sqrt(data_energy);
  prob.residuals = [&](std::span<const double> q, std::span<double> r) {
    const auto p = dipole_direction({q[0], q[1]});
    std::vector<double> model;
    for (std::size_t k = 0; k < planes; ++k) {
      bases[k].image_into(p, model);
      const double a = q[2 + 2 * k], b = q[3 + 2 * k];
      const auto& m = stack[k].pixels;
      for (std::size_t i = 0; i < npix; ++i) r[k * npix + i] = (m[i] - a * model[i] - b) * rnorm;
    }
  };

  std::vector<double> defocus(planes);
  for (std::size_t k = 0; k < planes; ++k) defocus[k] = stack[k].defocus_nm;

  FitResult fit;
  try {
    fit = least_squares(prob);
  } catch (const RankDeficiencyError&) {
    // Axial dipoles leave φ unconstrained; refine θ, scales and backgrounds only.
    const double phi_fixed = phi0;
    LeastSquaresProblem reduced = prob;
    reduced.parameters.erase(reduced.parameters.begin() + 1);
    reduced.initial.erase(reduced.initial.begin() + 1);
    reduced.residuals = [&, phi_fixed](std::span<const double> q, std::span<double> r) {
      std::vector<double> full(q.begin(), q.end());
      full.insert(full.begin() + 1, phi_fixed);
      prob.residuals(full, r);
    };
    try {
      fit = least_squares(reduced);
      fit.names.insert(fit.names.begin() + 1, "phi");
      fit.values.insert(fit.values.begin() + 1, phi_fixed);
    } catch (const RankDeficiencyError&) {
      // On the pole θ is stationary as well; keep the grid angles.
      const double theta_fixed = theta0;
      LeastSquaresProblem scales = prob;
      scales.parameters.erase(scales.parameters.begin(), scales.parameters.begin() + 2);
      scales.initial.erase(scales.initial.begin(), scales.initial.begin() + 2);
      scales.residuals = [&, theta_fixed, phi_fixed](std::span<const double> q, std::span<double> r) {
        std::vector<double> full{theta_fixed, phi_fixed};
        full.insert(full.end(), q.begin(), q.end());
        prob.residuals(full, r);
      };
      fit = least_squares(scales);
      fit.names.insert(fit.names.begin(), {"theta", "phi"});
      fit.values.insert(fit.values.begin(), {theta_fixed, phi_fixed});
    }
    est.azimuth_undetermined = true;
  }

  if (options.refine_defocus) {
    LeastSquaresProblem dz;
    dz.n_residuals = prob.n_residuals;
    dz.parameters = prob.parameters;
    dz.initial = fit.values;
    for (std::size_t k = 0; k < planes; ++k) {
      const double z = stack[k].defocus_nm;
      dz.parameters.push_back({"defocus_" + std::to_string(k), "nm", std::max(0.0, 0.8 * z),
                               std::min(kMaxDefocusNm, 1.2 * z + 1.0)});
      dz.initial.push_back(z);
    }
    const std::size_t np = prob.parameters.size();
    dz.residuals = [&, np](std::span<const double> q, std::span<double> r) {
      const auto p = dipole_direction({q[0], q[1]});
      std::vector<double> model;
      for (std::size_t k = 0; k < planes; ++k) {
        const auto b = kernels::defocus_basis_serial(optics, q[np + k], orders[k]);
        b.image_into(p, model);
        const double a = q[2 + 2 * k], bg = q[3 + 2 * k];
        const auto& m = stack[k].pixels;
        for (std::size_t i = 0; i < npix; ++i) r[k * npix + i] = (m[i] - a * model[i] - bg) * rnorm;
      }
    };
    LeastSquaresOptions o;
    o.max_iterations = 50;
    fit = least_squares(dz, o);
    for (std::size_t k = 0; k < planes; ++k) defocus[k] = fit.values[np + k];
  }

  est.orientation = canonicalize({fit.values[0], fit.values[1]});
  if (est.azimuth_undetermined && est.orientation.polar_deg == 0.0) est.orientation.azimuth_deg = 0.0;
  est.defocus_refined = defocus;
  for (std::size_t k = 0; k < planes; ++k) {
    est.scales.push_back(fit.values[2 + 2 * k]);
    est.backgrounds.push_back(fit.values[3 + 2 * k]);
  }
  est.residual = fit.chi2 * data_energy * norm;
  est.converged = fit.converged;
  est.iterations = fit.iterations;
  return est;
}

nlohmann::json image_sidecar(const DefocusedImage& image) {
  nlohmann::json j = {{"format", "f64le-grid"},
                      {"grid_size", image.grid_size},
                      {"pixel_pitch_nm", image.optics.pixel_pitch_nm},
                      {"defocus_nm", image.defocus_nm},
                      {"optics", image.optics}};
  if (image.orientation) j["orientation"] = *image.orientation;
  return j;
}

void save_image(const std::filesystem::path& path, const DefocusedImage& image) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              std::streamsize(image.pixels.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::ofstream side(path.string() + ".json");
  if (!side) throw IoError("cannot write sidecar for " + path.string());
  side << image_sidecar(image).dump(2) << '\n';
}

DefocusedImage load_image(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw IoError("missing image sidecar " + path.string() + ".json");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed image sidecar: " + std::string(e.what()));
  }
  if (j.value("format", "") != "f64le-grid") {
    throw FormatError(path.string() + ": expected an f64le-grid image sidecar");
  }
  DefocusedImage im;
  im.grid_size = j.at("grid_size").get<int>();
  im.defocus_nm = j.at("defocus_nm").get<double>();
  im.optics = j.at("optics").get<OpticsConfig>();
  if (j.contains("orientation")) im.orientation = j["orientation"].get<DipoleOrientation>();

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::size_t n = std::size_t(im.grid_size) * std::size_t(im.grid_size);
  im.pixels.resize(n);
  in.read(reinterpret_cast<char*>(im.pixels.data()), std::streamsize(n * sizeof(double)));
  if (std::size_t(in.gcount()) != n * sizeof(double) || in.peek() != EOF) {
    throw FormatError(path.string() + ": pixel block does not match grid_size");
  }
  return im;
}

void write_pgm(const std::filesystem::path& path, const DefocusedImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const double peak = std::max(1e-300, *std::max_element(image.pixels.begin(), image.pixels.end()));
  out << "P5\n" << image.grid_size << ' ' << image.grid_size << "\n255\n";
  for (double v : image.pixels) {
    out.put(char(std::uint8_t(std::lround(std::clamp(v / peak, 0.0, 1.0) * 255.0))));
  }
}

}  // namespace photonlab
