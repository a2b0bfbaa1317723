#include "photonlab/config.hpp"

#include <fstream>
#include <set>

#include "photonlab/error.hpp"

namespace photonlab {

namespace {

using nlohmann::json;

// Reads the fields of one JSON object, remembering which keys were consumed
// so that leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + name(key) + "': " + e.what());
    }
  }

  template <class F>
  void object(const char* key, F&& f) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    f(*it, name(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + name(k) + "'");
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : "config key '" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read(const json& j, const std::string& path, DipoleOrientation& o) {
  ObjectReader r(j, path);
  r.get("polar_deg", o.polar_deg);
  r.get("azimuth_deg", o.azimuth_deg);
  r.finish();
}

void read(const json& j, const std::string& path, Emitter& e) {
  ObjectReader r(j, path);
  r.get("center_wavelength_nm", e.center_wavelength_nm);
  r.get("fwhm_nm", e.fwhm_nm);
  r.get("excited_lifetime_ns", e.excited_lifetime_ns);
  r.object("dipole", [&](const json& s, const std::string& p) { read(s, p, e.dipole); });
  r.get("detected_rate_cps", e.detected_rate_cps);
  r.get("signal_fraction", e.signal_fraction);
  r.finish();
}

void read(const json& j, const std::string& path, ExcitationConfig& c) {
  ObjectReader r(j, path);
  std::string mode = c.mode == ExcitationMode::CW ? "cw" : "pulsed";
  r.get("mode", mode);
  if (mode == "cw") {
    c.mode = ExcitationMode::CW;
  } else if (mode == "pulsed") {
    c.mode = ExcitationMode::Pulsed;
  } else {
    throw ConfigError("config key '" + r.name("mode") + "' must be \"cw\" or \"pulsed\"");
  }
  r.get("cw_excitation_rate_per_ns", c.cw_excitation_rate_per_ns);
  r.get("pulse_period_ns", c.pulse_period_ns);
  r.get("pulse_excitation_prob", c.pulse_excitation_prob);
  r.get("pulse_width_ps", c.pulse_width_ps);
  r.get("pulse_offset_ns", c.pulse_offset_ns);
  r.finish();
}

void read(const json& j, const std::string& path, DetectorConfig& c) {
  ObjectReader r(j, path);
  r.get("efficiency", c.efficiency);
  r.get("dark_rate_cps", c.dark_rate_cps);
  r.get("jitter_sigma_ps", c.jitter_sigma_ps);
  r.get("dead_time_ns", c.dead_time_ns);
  r.finish();
}

void read(const json& j, const std::string& path, ScanProtocol& c) {
  ObjectReader r(j, path);
  r.get("motor_step_um", c.motor_step_um);
  r.get("piezo_span_um", c.piezo_span_um);
  r.get("piezo_sample_spacing_nm", c.piezo_sample_spacing_nm);
  r.get("n_motor_steps", c.n_motor_steps);
  r.get("dwell_time_s", c.dwell_time_s);
  r.get("mirror_displacement_to_opd_factor", c.mirror_displacement_to_opd_factor);
  r.get("center_mirror_um", c.center_mirror_um);
  r.get("phase_drift_rad_per_sample", c.phase_drift_rad_per_sample);
  r.finish();
}

void read(const json& j, const std::string& path, OpticsConfig& c) {
  ObjectReader r(j, path);
  r.get("numerical_aperture", c.numerical_aperture);
  r.get("immersion_index", c.immersion_index);
  r.get("emission_wavelength_nm", c.emission_wavelength_nm);
  r.get("magnification", c.magnification);
  r.get("pixel_pitch_nm", c.pixel_pitch_nm);
  r.get("grid_size", c.grid_size);
  r.finish();
}

void read(const json& j, const std::string& path, InstrumentConfig& c) {
  ObjectReader r(j, path);
  r.object("scan", [&](const json& s, const std::string& p) { read(s, p, c.scan); });
  r.object("correlator", [&](const json& s, const std::string& p) {
    ObjectReader q(s, p);
    q.get("acquisition_s", c.correlator.acquisition_s);
    q.get("bin_width_ps", c.correlator.bin_width_ps);
    q.get("max_tau_ps", c.correlator.max_tau_ps);
    q.finish();
  });
  r.object("imaging", [&](const json& s, const std::string& p) {
    ObjectReader q(s, p);
    q.object("optics", [&](const json& o, const std::string& op) { read(o, op, c.imaging.optics); });
    q.get("defocus_nm", c.imaging.defocus_nm);
    q.get("pixel_noise", c.imaging.pixel_noise);
    q.get("search_step_deg", c.imaging.search_step_deg);
    q.finish();
  });
  r.object("polarization", [&](const json& s, const std::string& p) {
    ObjectReader q(s, p);
    auto& x = c.polarization;
    q.get("step_deg", x.step_deg);
    q.get("peak_counts", x.peak_counts);
    q.get("background_counts", x.background_counts);
    q.get("absorption_contrast", x.absorption_contrast);
    q.get("absorption_azimuth_deg", x.absorption_azimuth_deg);
    q.get("emission_azimuth_deg", x.emission_azimuth_deg);
    q.get("excitation_polarization_deg", x.excitation_polarization_deg);
    q.finish();
  });
  r.object("spectrum", [&](const json& s, const std::string& p) {
    ObjectReader q(s, p);
    auto& x = c.spectrum;
    q.get("start_nm", x.start_nm);
    q.get("stop_nm", x.stop_nm);
    q.get("step_nm", x.step_nm);
    q.get("peak_counts", x.peak_counts);
    q.get("offset_counts", x.offset_counts);
    q.finish();
  });
  r.object("lifetime", [&](const json& s, const std::string& p) {
    ObjectReader q(s, p);
    auto& x = c.lifetime;
    q.get("n_pulses", x.n_pulses);
    q.get("bin_ps", x.bin_ps);
    q.get("pre_window_ps", x.pre_window_ps);
    q.get("window_start_ps", x.window_start_ps);
    q.finish();
  });
  r.finish();
}

}  // namespace

void to_json(json& j, const DipoleOrientation& o) {
  j = {{"polar_deg", o.polar_deg}, {"azimuth_deg", o.azimuth_deg}};
}
void from_json(const json& j, DipoleOrientation& o) { read(j, "", o); }

void to_json(json& j, const Emitter& e) {
  j = {{"center_wavelength_nm", e.center_wavelength_nm},
       {"fwhm_nm", e.fwhm_nm},
       {"excited_lifetime_ns", e.excited_lifetime_ns},
       {"dipole", e.dipole},
       {"detected_rate_cps", e.detected_rate_cps},
       {"signal_fraction", e.signal_fraction}};
}
void from_json(const json& j, Emitter& e) { read(j, "", e); }

void to_json(json& j, const ExcitationConfig& c) {
  j = {{"mode", c.mode == ExcitationMode::CW ? "cw" : "pulsed"},
       {"cw_excitation_rate_per_ns", c.cw_excitation_rate_per_ns},
       {"pulse_period_ns", c.pulse_period_ns},
       {"pulse_excitation_prob", c.pulse_excitation_prob},
       {"pulse_width_ps", c.pulse_width_ps},
       {"pulse_offset_ns", c.pulse_offset_ns}};
}
void from_json(const json& j, ExcitationConfig& c) { read(j, "", c); }

void to_json(json& j, const DetectorConfig& c) {
  j = {{"efficiency", c.efficiency},
       {"dark_rate_cps", c.dark_rate_cps},
       {"jitter_sigma_ps", c.jitter_sigma_ps},
       {"dead_time_ns", c.dead_time_ns}};
}
void from_json(const json& j, DetectorConfig& c) { read(j, "", c); }

void to_json(json& j, const ScanProtocol& c) {
  j = {{"motor_step_um", c.motor_step_um},
       {"piezo_span_um", c.piezo_span_um},
       {"piezo_sample_spacing_nm", c.piezo_sample_spacing_nm},
       {"n_motor_steps", c.n_motor_steps},
       {"dwell_time_s", c.dwell_time_s},
       {"mirror_displacement_to_opd_factor", c.mirror_displacement_to_opd_factor},
       {"center_mirror_um", c.center_mirror_um},
       {"phase_drift_rad_per_sample", c.phase_drift_rad_per_sample}};
}
void from_json(const json& j, ScanProtocol& c) { read(j, "", c); }

void to_json(json& j, const OpticsConfig& c) {
  j = {{"numerical_aperture", c.numerical_aperture},
       {"immersion_index", c.immersion_index},
       {"emission_wavelength_nm", c.emission_wavelength_nm},
       {"magnification", c.magnification},
       {"pixel_pitch_nm", c.pixel_pitch_nm},
       {"grid_size", c.grid_size}};
}
void from_json(const json& j, OpticsConfig& c) { read(j, "", c); }

void to_json(json& j, const ExperimentConfig& c) {
  const auto& in = c.instrument;
  j = {{"schema_version", c.schema_version},
       {"emitter", c.emitter},
       {"n_emitters", c.n_emitters},
       {"excitation", c.excitation},
       {"detector", c.detector},
       {"instrument",
        {{"scan", in.scan},
         {"correlator",
          {{"acquisition_s", in.correlator.acquisition_s},
           {"bin_width_ps", in.correlator.bin_width_ps},
           {"max_tau_ps", in.correlator.max_tau_ps}}},
         {"imaging",
          {{"optics", in.imaging.optics},
           {"defocus_nm", in.imaging.defocus_nm},
           {"pixel_noise", in.imaging.pixel_noise},
           {"search_step_deg", in.imaging.search_step_deg}}},
         {"polarization",
          {{"step_deg", in.polarization.step_deg},
           {"peak_counts", in.polarization.peak_counts},
           {"background_counts", in.polarization.background_counts},
           {"absorption_contrast", in.polarization.absorption_contrast},
           {"absorption_azimuth_deg", in.polarization.absorption_azimuth_deg},
           {"emission_azimuth_deg", in.polarization.emission_azimuth_deg},
           {"excitation_polarization_deg", in.polarization.excitation_polarization_deg}}},
         {"spectrum",
          {{"start_nm", in.spectrum.start_nm},
           {"stop_nm", in.spectrum.stop_nm},
           {"step_nm", in.spectrum.step_nm},
           {"peak_counts", in.spectrum.peak_counts},
           {"offset_counts", in.spectrum.offset_counts}}},
         {"lifetime",
          {{"n_pulses", in.lifetime.n_pulses},
           {"bin_ps", in.lifetime.bin_ps},
           {"pre_window_ps", in.lifetime.pre_window_ps},
           {"window_start_ps", in.lifetime.window_start_ps}}}}},
       {"seed", c.seed},
       {"output_dir", c.output_dir}};
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c = paper_default_config();
  ObjectReader r(j, "");
  r.get("schema_version", c.schema_version);
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("config key 'schema_version': unsupported version " +
                      std::to_string(c.schema_version) + " (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  r.object("emitter", [&](const json& s, const std::string& p) { read(s, p, c.emitter); });
  r.get("n_emitters", c.n_emitters);
  r.object("excitation", [&](const json& s, const std::string& p) { read(s, p, c.excitation); });
  r.object("detector", [&](const json& s, const std::string& p) { read(s, p, c.detector); });
  r.object("instrument", [&](const json& s, const std::string& p) { read(s, p, c.instrument); });
  r.get("seed", c.seed);
  r.get("output_dir", c.output_dir);
  r.finish();
  return c;
}

void ExperimentConfig::validate() const {
  emitter.validate();
  if (n_emitters < 1) throw ConfigError("n_emitters must be >= 1");
  excitation.validate();
  detector.validate();
  const auto& in = instrument;
  in.scan.validate(emitter.center_wavelength_nm);
  if (!(in.correlator.acquisition_s > 0.0)) throw ConfigError("instrument.correlator.acquisition_s must be > 0");
  if (!(in.correlator.bin_width_ps >= 1.0)) throw ConfigError("instrument.correlator.bin_width_ps must be >= 1");
  if (!(in.correlator.max_tau_ps >= in.correlator.bin_width_ps)) {
    throw ConfigError("instrument.correlator.max_tau_ps must be >= bin_width_ps");
  }
  in.imaging.optics.validate();
  if (in.imaging.defocus_nm.empty()) throw ConfigError("instrument.imaging.defocus_nm must not be empty");
  for (double z : in.imaging.defocus_nm) {
    if (!(z >= 0.0 && z <= 5000.0)) throw ConfigError("instrument.imaging.defocus_nm entries must lie in [0, 5000]");
  }
  if (!(in.imaging.pixel_noise >= 0.0)) throw ConfigError("instrument.imaging.pixel_noise must be >= 0");
  if (!(in.imaging.search_step_deg > 0.0 && in.imaging.search_step_deg <= 45.0)) {
    throw ConfigError("instrument.imaging.search_step_deg must lie in (0, 45]");
  }
  const auto& p = in.polarization;
  if (!(p.step_deg > 0.0)) throw ConfigError("instrument.polarization.step_deg must be > 0");
  if (!(p.peak_counts > 0.0)) throw ConfigError("instrument.polarization.peak_counts must be > 0");
  if (!(p.background_counts >= 0.0)) throw ConfigError("instrument.polarization.background_counts must be >= 0");
  if (!(p.absorption_contrast >= 0.0 && p.absorption_contrast <= 1.0)) {
    throw ConfigError("instrument.polarization.absorption_contrast must lie in [0, 1]");
  }
  const auto& s = in.spectrum;
  if (!(s.step_nm > 0.0) || !(s.stop_nm > s.start_nm)) {
    throw ConfigError("instrument.spectrum needs step_nm > 0 and stop_nm > start_nm");
  }
  if (!(s.peak_counts > 0.0) || !(s.offset_counts >= 0.0)) {
    throw ConfigError("instrument.spectrum needs peak_counts > 0 and offset_counts >= 0");
  }
  const auto& l = in.lifetime;
  if (l.n_pulses == 0) throw ConfigError("instrument.lifetime.n_pulses must be > 0");
  if (!(l.bin_ps > 0.0)) throw ConfigError("instrument.lifetime.bin_ps must be > 0");
  if (!(l.pre_window_ps >= 0.0) || !(l.pre_window_ps < excitation.pulse_period_ns * 1000.0)) {
    throw ConfigError("instrument.lifetime.pre_window_ps must lie in [0, pulse period)");
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  auto c = parse_config(j);
  c.validate();
  return c;
}

ExperimentConfig paper_default_config() {
  ExperimentConfig c;
  c.emitter.signal_fraction = 0.806;
  return c;
}

}  // namespace photonlab
