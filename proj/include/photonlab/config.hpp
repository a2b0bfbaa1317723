#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "photonlab/emitter.hpp"
#include "photonlab/interferometry.hpp"
#include "photonlab/optics.hpp"
#include "photonlab/photostream.hpp"

namespace photonlab {

void to_json(nlohmann::json& j, const DipoleOrientation& o);
void from_json(const nlohmann::json& j, DipoleOrientation& o);
void to_json(nlohmann::json& j, const Emitter& e);
void from_json(const nlohmann::json& j, Emitter& e);
void to_json(nlohmann::json& j, const ExcitationConfig& c);
void from_json(const nlohmann::json& j, ExcitationConfig& c);
void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);
void to_json(nlohmann::json& j, const ScanProtocol& c);
void from_json(const nlohmann::json& j, ScanProtocol& c);
void to_json(nlohmann::json& j, const OpticsConfig& c);
void from_json(const nlohmann::json& j, OpticsConfig& c);

inline constexpr int kConfigSchemaVersion = 1;

struct CorrelatorConfig {
  double acquisition_s = 0.055;  // ≈10⁷ detected events at the default rates
  double bin_width_ps = 256.0;
  double max_tau_ps = 50000.0;
};

struct ImagingConfig {
  OpticsConfig optics;
  std::vector<double> defocus_nm{500.0, 720.0, 1320.0};
  double pixel_noise = 0.05;  // σ relative to the peak pixel
  double search_step_deg = 2.0;
};

struct PolarizationConfig {
  double step_deg = 5.0;
  double peak_counts = 2000.0;
  double background_counts = 200.0;
  double absorption_contrast = 1.0;
  double absorption_azimuth_deg = 28.6;  // absorption dipole (HWP sweep)
  double emission_azimuth_deg = 29.9;    // emission dipole (polarizer sweep)
  std::vector<double> excitation_polarization_deg{0.0, 90.0};
};

struct SpectrumConfig {
  double start_nm = 784.7;
  double stop_nm = 804.7;
  double step_nm = 0.05;
  double peak_counts = 5000.0;
  double offset_counts = 50.0;
};

struct LifetimeConfig {
  std::uint64_t n_pulses = 1000000;
  double bin_ps = 50.0;
  double pre_window_ps = 2000.0;
  double window_start_ps = 500.0;
};

struct InstrumentConfig {
  ScanProtocol scan;
  CorrelatorConfig correlator;
  ImagingConfig imaging;
  PolarizationConfig polarization;
  SpectrumConfig spectrum;
  LifetimeConfig lifetime;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  Emitter emitter;
  int n_emitters = 1;
  ExcitationConfig excitation;
  DetectorConfig detector;
  InstrumentConfig instrument;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  // Throws ConfigError naming the offending key.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Strict: unknown keys and wrong types throw ConfigError naming the key path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Defaults chosen to match the NE8 measurements.
ExperimentConfig paper_default_config();

}  // namespace photonlab
