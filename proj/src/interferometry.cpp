#include "photonlab/interferometry.hpp"

#include <algorithm>
#include <cmath>

#include "photonlab/config.hpp"
#include "photonlab/csv.hpp"
#include "photonlab/error.hpp"
#include "photonlab/random.hpp"
#include "photonlab/units.hpp"

namespace photonlab {

void ScanProtocol::validate(double center_wavelength_nm) const {
  if (mirror_displacement_to_opd_factor != kMirrorToOpd) {
    throw ConfigError("scan.mirror_displacement_to_opd_factor must be exactly 2");
  }
  if (!(piezo_sample_spacing_nm > 0.0)) throw ConfigError("scan.piezo_sample_spacing_nm must be > 0");
  if (!(piezo_sample_spacing_nm < center_wavelength_nm / 4.0)) {
    throw ConfigError("scan.piezo_sample_spacing_nm must be < lambda0/4 to resolve fringes");
  }
  if (n_motor_steps < 1) throw ConfigError("scan.n_motor_steps must be >= 1");
  if (!(motor_step_um > 0.0)) throw ConfigError("scan.motor_step_um must be > 0");
  if (!(piezo_span_um >= 0.0)) throw ConfigError("scan.piezo_span_um must be >= 0");
  if (!(dwell_time_s >= 0.0)) throw ConfigError("scan.dwell_time_s must be >= 0");
}

int ScanProtocol::samples_per_segment() const {
  return int(std::floor(piezo_span_um * units::kNmPerUm / piezo_sample_spacing_nm + 1e-9)) + 1;
}

double analytic_visibility(const Emitter& emitter, double opd_nm) {
  const double l_nm = coherence_length_um(emitter.center_wavelength_nm, emitter.fwhm_nm) *
                      units::kNmPerUm;
  return std::exp(-std::abs(opd_nm) / l_nm);
}

double interferogram_mean(const Emitter& emitter, double opd_nm, double dwell_time_s) {
  const double i0 = emitter.detected_rate_cps * dwell_time_s / 2.0;
  const double carrier = std::cos(2.0 * units::kPi * opd_nm / emitter.center_wavelength_nm);
  return i0 * (1.0 + analytic_visibility(emitter, opd_nm) * carrier);
}

Interferogram analytic_interferogram(const Emitter& emitter, std::span<const double> opds_nm,
                                     double dwell_time_s) {
  Interferogram ig;
  ig.samples.reserve(opds_nm.size());
  for (double d : opds_nm) {
    ig.samples.push_back({d, std::max(0.0, interferogram_mean(emitter, d, dwell_time_s))});
  }
  std::stable_sort(ig.samples.begin(), ig.samples.end(),
                   [](const auto& a, const auto& b) { return a.opd_nm < b.opd_nm; });
  ig.metadata = {{"producer", "analytic_interferogram"},
                 {"emitter", emitter},
                 {"dwell_time_s", dwell_time_s}};
  return ig;
}

std::vector<double> scan_mirror_positions_nm(const ScanProtocol& p) {
  std::vector<double> pos;
  const int per_segment = p.samples_per_segment();
  pos.reserve(std::size_t(p.n_motor_steps) * std::size_t(per_segment));
  const double step = p.motor_step_um * units::kNmPerUm;
  const double center = p.center_mirror_um * units::kNmPerUm;
  const double half_span = 0.5 * double(per_segment - 1) * p.piezo_sample_spacing_nm;
  for (int j = 0; j < p.n_motor_steps; ++j) {
    const double motor = center + (double(j) - 0.5 * double(p.n_motor_steps - 1)) * step;
    for (int i = 0; i < per_segment; ++i) {
      pos.push_back(motor - half_span + double(i) * p.piezo_sample_spacing_nm);
    }
  }
  return pos;
}

Interferogram simulate_michelson_scan(const Emitter& emitter, const ScanProtocol& protocol,
                                      std::uint64_t noise_seed) {
  emitter.validate();
  protocol.validate(emitter.center_wavelength_nm);
  const auto mirror = scan_mirror_positions_nm(protocol);
  auto rng = make_rng(noise_seed, 0x4d49434845ULL);

  Interferogram ig;
  ig.samples.reserve(mirror.size());
  const double i0 = emitter.detected_rate_cps * protocol.dwell_time_s / 2.0;
  for (std::size_t k = 0; k < mirror.size(); ++k) {
    const double opd = protocol.mirror_displacement_to_opd_factor * mirror[k];
    const double phase = 2.0 * units::kPi * opd / emitter.center_wavelength_nm +
                         protocol.phase_drift_rad_per_sample * double(k);
    const double mean = i0 * (1.0 + analytic_visibility(emitter, opd) * std::cos(phase));
    ig.samples.push_back({opd, double(poisson(rng, std::max(0.0, mean)))});
  }
  std::stable_sort(ig.samples.begin(), ig.samples.end(),
                   [](const auto& a, const auto& b) { return a.opd_nm < b.opd_nm; });
  ig.metadata = {{"producer", "simulate_michelson_scan"},
                 {"seed", noise_seed},
                 {"emitter", emitter},
                 {"scan", protocol}};
  return ig;
}

double max_opd_gap_nm(const Interferogram& ig) {
  double gap = 0.0;
  for (std::size_t i = 1; i < ig.samples.size(); ++i) {
    gap = std::max(gap, ig.samples[i].opd_nm - ig.samples[i - 1].opd_nm);
  }
  return gap;
}

void write_interferogram_csv(std::ostream& out, const Interferogram& ig) {
  csv::Table t;
  t.provenance = ig.metadata;
  t.columns = {"opd_nm", "intensity_counts"};
  t.rows.reserve(ig.samples.size());
  for (const auto& s : ig.samples) t.rows.push_back({s.opd_nm, s.intensity});
  csv::write(out, t);
}

Interferogram read_interferogram_csv(std::istream& in) {
  auto t = csv::read(in, {"opd_nm", "intensity_counts"}, "interferogram");
  Interferogram ig;
  ig.metadata = t.provenance;
  for (const auto& r : t.rows) {
    if (r[1] < 0.0) throw FormatError("interferogram: negative intensity");
    ig.samples.push_back({r[0], r[1]});
  }
  if (!std::is_sorted(ig.samples.begin(), ig.samples.end(),
                      [](const auto& a, const auto& b) { return a.opd_nm < b.opd_nm; })) {
    throw FormatError("interferogram: opd values must be sorted ascending");
  }
  return ig;
}

}  // namespace photonlab
