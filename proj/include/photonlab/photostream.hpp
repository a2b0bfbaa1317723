#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "photonlab/emitter.hpp"
#include "photonlab/timetag.hpp"

namespace photonlab {

enum class ExcitationMode { CW, Pulsed };

struct ExcitationConfig {
  ExcitationMode mode = ExcitationMode::CW;
  double cw_excitation_rate_per_ns = 0.2;  // k_exc
  double pulse_period_ns = 50.0;
  double pulse_excitation_prob = 0.1;
  double pulse_width_ps = 130.0;   // FWHM of the Gaussian pulse
  double pulse_offset_ns = 2.0;    // arrival time of the first pulse

  void validate() const;
};

struct DetectorConfig {
  double efficiency = 1.0;
  double dark_rate_cps = 0.0;
  double jitter_sigma_ps = 0.0;
  double dead_time_ns = 0.0;

  void validate() const;
  std::uint64_t dead_time_ps() const;
};

// Mean emission rate (per ns) of a driven two-level renewal process:
// k / (1 + k τ).
double two_level_emission_rate_per_ns(double excitation_rate_per_ns, double lifetime_ns);

// N independent two-level emitters plus homogeneous Poisson background, one
// detector channel. The background rate is chosen so that each emitter's
// signal_fraction holds for the detected counts. Deterministic in `seed`.
TimeTagStream simulate_cw_stream(std::span<const Emitter> emitters,
                                 const ExcitationConfig& excitation,
                                 const DetectorConfig& detector, std::uint64_t duration_ps,
                                 std::uint64_t seed);

// Pulsed excitation: at most one emitter photon per pulse, arriving at
// pulse time + Gaussian(pulse_width / 2.355) + Exp(τ_exc).
TimeTagStream simulate_pulsed_stream(const Emitter& emitter, const ExcitationConfig& excitation,
                                     const DetectorConfig& detector, std::uint64_t n_pulses,
                                     std::uint64_t seed);

// Routes each tag of a single-channel stream to channel 0 or 1 with a fair
// coin, then applies the per-channel dead time. When `dead_time_ps` is not
// given it is taken from the stream's detector provenance (0 if absent).
TimeTagStream split_hbt(const TimeTagStream& stream, std::uint64_t seed,
                        std::optional<std::uint64_t> dead_time_ps = std::nullopt);

// CW emission through a 50:50 splitter onto two identical detectors. Dead
// time acts per detector after the split.
TimeTagStream simulate_hbt_stream(std::span<const Emitter> emitters,
                                  const ExcitationConfig& excitation,
                                  const DetectorConfig& detector, std::uint64_t duration_ps,
                                  std::uint64_t seed);

// Non-paralyzable dead-time filter over a sorted list of timestamps; also
// removes exact duplicates.
std::vector<std::uint64_t> apply_dead_time(std::span<const std::uint64_t> sorted_times,
                                           std::uint64_t dead_time_ps);

struct TcspcBin {
  double delay_ps;  // bin center relative to the excitation pulse
  std::uint64_t counts;
};

// Histogram of photon delays after the most recent pulse (pulse k at
// offset + k·period). Delays are folded into [−pre_window, period − pre_window).
std::vector<TcspcBin> tcspc_histogram(const TimeTagStream& stream, double period_ps,
                                      double offset_ps, double bin_ps, double pre_window_ps,
                                      std::uint8_t channel = 0);

}  // namespace photonlab
