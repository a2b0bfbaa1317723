#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "photonlab/config.hpp"

namespace photonlab {

struct ReportRow {
  std::string quantity;
  std::string paper;       // value as reported, e.g. "0.65 ± 0.03"
  double target = 0.0;     // numeric value compared against
  double simulated = 0.0;
  double tolerance = 0.0;  // |simulated − target| ≤ tolerance passes
  std::string unit;
  bool pass = false;
  std::string error;       // stage failure message, if any
};

struct ReproductionReport {
  std::uint64_t seed = 0;
  bool quick = false;
  std::vector<ReportRow> rows;
  std::vector<std::string> notes;

  bool pass() const;
  nlohmann::json to_json() const;
  std::string table() const;
};

struct ReproduceOptions {
  std::filesystem::path output_dir = "reproduction";
  std::uint64_t seed = 1;
  bool quick = false;  // event counts ÷100, tolerances ×3
};

// Runs every simulate → analyze stage with the shipped defaults, writing data
// products, plots and report.json to the output directory.
ReproductionReport reproduce_paper(const ReproduceOptions& options, std::ostream* log = nullptr);

// Shared sampling grids for the spectrum and polarization sweeps.
std::vector<double> spectrum_wavelengths(const SpectrumConfig& c);
std::vector<double> sweep_angles(double step_deg, double stop_deg);

// Single-emitter HBT stream for the configured acquisition.
std::uint64_t acquisition_ps(const ExperimentConfig& c);

}  // namespace photonlab
