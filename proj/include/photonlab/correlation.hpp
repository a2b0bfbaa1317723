#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "photonlab/timetag.hpp"

namespace photonlab {

struct CorrelationBin {
  double tau_ps;             // bin center
  double g2;
  std::uint64_t raw;         // coincidences
  double expected;           // uncorrelated expectation for this bin
};

struct CorrelationHistogram {
  std::vector<CorrelationBin> bins;  // ascending τ, symmetric about 0
  std::int64_t bin_width_ps = 0;
  double rate0_per_ps = 0.0;
  double rate1_per_ps = 0.0;
  double duration_ps = 0.0;
  nlohmann::json provenance = nlohmann::json::object();

  const CorrelationBin& zero_bin() const { return bins[bins.size() / 2]; }
};

// Correlator defaults; neither value is reported with the source data.
inline constexpr std::int64_t kDefaultG2BinPs = 256;
inline constexpr std::int64_t kDefaultG2MaxTauPs = 50'000;

enum class Parallelism { Serial, OpenMP };

// Full cross-correlation of channel 0 against channel 1 (τ = t₁ − t₀) over
// |τ| ≤ max_tau, normalized by the uncorrelated expectation
// n₀ n₁ / T² · (bin span) · (T − |τ|) so that independent streams give g2 ≈ 1.
CorrelationHistogram compute_g2(const TimeTagStream& stream, std::int64_t bin_width_ps,
                                std::int64_t max_tau_ps,
                                Parallelism mode = Parallelism::OpenMP);

struct EmitterCount {
  double estimate;
  int rounded;
};

// N = p² / C under the background-diluted two-level model. A contrast
// exceeding p² by more than max(3σ, 0.1 % of p²) is an InconsistencyError.
EmitterCount estimate_emitter_count(double contrast, double signal_fraction,
                                    double contrast_sigma = 0.0);

// CSV `tau_ps,g2,raw` with normalization metadata in the provenance line.
void write_g2_csv(std::ostream& out, const CorrelationHistogram& h);
CorrelationHistogram read_g2_csv(std::istream& in);

}  // namespace photonlab
