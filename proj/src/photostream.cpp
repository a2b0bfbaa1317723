#include "photonlab/photostream.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "photonlab/config.hpp"
#include "photonlab/error.hpp"
#include "photonlab/random.hpp"
#include "photonlab/units.hpp"

namespace photonlab {

namespace {

// Substream ids. Emitters use their index; the rest sit above any sane N.
constexpr std::uint64_t kBackgroundStream = 1u << 20;
constexpr std::uint64_t kDarkStream = (1u << 20) + 1;
constexpr std::uint64_t kDetectorStreamBase = 1u << 21;
constexpr std::uint64_t kPulseBlockBase = 1u << 22;
constexpr std::uint64_t kPulseBlock = 1u << 16;

// Per-source detector response: efficiency thinning and Gaussian jitter.
// Times are in ps (doubles) and are left unsorted.
void detect(std::vector<double>& times_ps, const DetectorConfig& det, Rng& rng) {
  std::size_t kept = 0;
  for (double t : times_ps) {
    if (!bernoulli(rng, det.efficiency)) continue;
    times_ps[kept++] = t + normal(rng, 0.0, det.jitter_sigma_ps);
  }
  times_ps.resize(kept);
}

std::vector<double> poisson_process(double rate_per_ps, double duration_ps, Rng& rng) {
  std::vector<double> out;
  if (rate_per_ps <= 0.0) return out;
  const double mean_gap = 1.0 / rate_per_ps;
  for (double t = exponential(rng, mean_gap); t <= duration_ps; t += exponential(rng, mean_gap)) {
    out.push_back(t);
  }
  return out;
}

// Quantize, clip to [0, duration] and sort. Coincident timestamps are kept.
std::vector<std::uint64_t> quantize_sorted(const std::vector<std::vector<double>>& sources,
                                           std::uint64_t duration_ps) {
  std::vector<std::uint64_t> q;
  std::size_t n = 0;
  for (const auto& s : sources) n += s.size();
  q.reserve(n);
  const double dur = double(duration_ps);
  for (const auto& s : sources) {
    for (double t : s) {
      if (t < 0.0 || t > dur) continue;
      q.push_back(std::uint64_t(std::llround(t)));
    }
  }
  std::sort(q.begin(), q.end());
  return q;
}

// Fair-coin routing onto two detectors, then per-detector dead time.
std::vector<std::vector<std::uint64_t>> route_hbt(std::span<const std::uint64_t> times,
                                                  std::uint64_t seed, std::uint64_t dead_time_ps) {
  auto rng = make_rng(seed, 0x4842540000000000ULL);  // "HBT"
  std::vector<std::uint64_t> routed[2];
  for (auto t : times) routed[bernoulli(rng, 0.5) ? 1 : 0].push_back(t);
  return {apply_dead_time(routed[0], dead_time_ps), apply_dead_time(routed[1], dead_time_ps)};
}

// Detected photon times of the CW model, sorted, before any dead time.
std::vector<std::uint64_t> cw_detections(std::span<const Emitter> emitters,
                                         const ExcitationConfig& excitation,
                                         const DetectorConfig& detector,
                                         std::uint64_t duration_ps, std::uint64_t seed);

}  // namespace

void ExcitationConfig::validate() const {
  if (mode == ExcitationMode::CW) {
    if (!(cw_excitation_rate_per_ns > 0.0)) {
      throw ConfigError("excitation.cw_excitation_rate_per_ns must be > 0");
    }
  } else {
    if (!(pulse_period_ns > 0.0)) throw ConfigError("excitation.pulse_period_ns must be > 0");
    if (!(pulse_excitation_prob >= 0.0 && pulse_excitation_prob <= 1.0)) {
      throw ConfigError("excitation.pulse_excitation_prob must lie in [0, 1]");
    }
    if (!(pulse_width_ps >= 0.0)) throw ConfigError("excitation.pulse_width_ps must be >= 0");
    if (!(pulse_offset_ns >= 0.0 && pulse_offset_ns < pulse_period_ns)) {
      throw ConfigError("excitation.pulse_offset_ns must lie in [0, pulse_period_ns)");
    }
  }
}

void DetectorConfig::validate() const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw ConfigError("detector.efficiency must lie in (0, 1]");
  }
  if (!(dark_rate_cps >= 0.0)) throw ConfigError("detector.dark_rate_cps must be >= 0");
  if (!(jitter_sigma_ps >= 0.0)) throw ConfigError("detector.jitter_sigma_ps must be >= 0");
  if (!(dead_time_ns >= 0.0)) throw ConfigError("detector.dead_time_ns must be >= 0");
}

std::uint64_t DetectorConfig::dead_time_ps() const {
  return std::uint64_t(std::llround(dead_time_ns * units::kPsPerNs));
}

double two_level_emission_rate_per_ns(double k, double tau) { return k / (1.0 + k * tau); }

std::vector<std::uint64_t> apply_dead_time(std::span<const std::uint64_t> sorted_times,
                                           std::uint64_t dead_time_ps) {
  std::vector<std::uint64_t> out;
  out.reserve(sorted_times.size());
  const std::uint64_t min_gap = std::max<std::uint64_t>(dead_time_ps, 1);
  for (auto t : sorted_times) {
    if (out.empty() || t - out.back() >= min_gap) out.push_back(t);
  }
  return out;
}

TimeTagStream simulate_cw_stream(std::span<const Emitter> emitters,
                                 const ExcitationConfig& excitation,
                                 const DetectorConfig& detector, std::uint64_t duration_ps,
                                 std::uint64_t seed) {
  if (excitation.mode != ExcitationMode::CW) {
    throw ConfigError("simulate_cw_stream requires excitation.mode = cw");
  }
  excitation.validate();
  detector.validate();
  for (const auto& e : emitters) e.validate();

  nlohmann::json origin = {{"producer", "simulate_cw_stream"},
                           {"seed", seed},
                           {"emitters", emitters},
                           {"excitation", excitation},
                           {"detector", detector}};
  if (duration_ps == 0) return TimeTagStream{{}, 0, origin};
  std::vector<std::vector<std::uint64_t>> channels{
      apply_dead_time(cw_detections(emitters, excitation, detector, duration_ps, seed),
                      detector.dead_time_ps())};
  return merge_channels(channels, duration_ps, std::move(origin));
}

namespace {

std::vector<std::uint64_t> cw_detections(std::span<const Emitter> emitters,
                                         const ExcitationConfig& excitation,
                                         const DetectorConfig& detector,
                                         std::uint64_t duration_ps, std::uint64_t seed) {
  const double dur = double(duration_ps);
  const double k_per_ps = excitation.cw_excitation_rate_per_ns / units::kPsPerNs;
  const std::size_t n = emitters.size();

  // sources: [0, n) emitters, n background, n+1 dark counts
  std::vector<std::vector<double>> sources(n + 2);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_rng(seed, i);
    const double tau_ps = emitters[i].excited_lifetime_ns * units::kPsPerNs;
    auto& out = sources[i];
    double t = 0.0;
    while (true) {
      t += exponential(rng, 1.0 / k_per_ps);
      t += exponential(rng, tau_ps);
      if (t > dur) break;
      out.push_back(t);
    }
    auto det_rng = make_rng(seed, kDetectorStreamBase + i);
    detect(out, detector, det_rng);
  }

  // Background photons share the emitters' optical path, so they are thinned
  // by the detector like signal photons.
  double bg_rate_per_ns = 0.0;
  for (const auto& e : emitters) {
    const double s = two_level_emission_rate_per_ns(excitation.cw_excitation_rate_per_ns,
                                                    e.excited_lifetime_ns);
    bg_rate_per_ns += s * (1.0 - e.signal_fraction) / e.signal_fraction;
  }
  {
    auto rng = make_rng(seed, kBackgroundStream);
    sources[n] = poisson_process(bg_rate_per_ns / units::kPsPerNs, dur, rng);
    auto det_rng = make_rng(seed, kDetectorStreamBase + kBackgroundStream);
    detect(sources[n], detector, det_rng);
  }
  {
    auto rng = make_rng(seed, kDarkStream);
    sources[n + 1] = poisson_process(detector.dark_rate_cps / units::kPsPerS, dur, rng);
  }
  return quantize_sorted(sources, duration_ps);
}

}  // namespace

TimeTagStream simulate_pulsed_stream(const Emitter& emitter, const ExcitationConfig& excitation,
                                     const DetectorConfig& detector, std::uint64_t n_pulses,
                                     std::uint64_t seed) {
  if (excitation.mode != ExcitationMode::Pulsed) {
    throw ConfigError("simulate_pulsed_stream requires excitation.mode = pulsed");
  }
  excitation.validate();
  detector.validate();
  emitter.validate();

  const double period = excitation.pulse_period_ns * units::kPsPerNs;
  const double offset = excitation.pulse_offset_ns * units::kPsPerNs;
  const double pulse_sigma = excitation.pulse_width_ps / units::kFwhmPerSigma;
  const double tau_ps = emitter.excited_lifetime_ns * units::kPsPerNs;
  const auto duration_ps = std::uint64_t(std::llround(double(n_pulses) * period));

  nlohmann::json origin = {{"producer", "simulate_pulsed_stream"},
                           {"seed", seed},
                           {"n_pulses", n_pulses},
                           {"emitters", std::vector<Emitter>{emitter}},
                           {"excitation", excitation},
                           {"detector", detector}};

  const std::uint64_t n_blocks = (n_pulses + kPulseBlock - 1) / kPulseBlock;
  std::vector<std::vector<double>> sources(n_blocks + 2);

#pragma omp parallel for schedule(dynamic)
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    auto rng = make_rng(seed, kPulseBlockBase + b);
    auto& out = sources[b];
    const std::uint64_t first = b * kPulseBlock;
    const std::uint64_t last = std::min(n_pulses, first + kPulseBlock);
    for (std::uint64_t k = first; k < last; ++k) {
      if (!bernoulli(rng, excitation.pulse_excitation_prob)) continue;
      const double t0 = offset + double(k) * period;
      out.push_back(t0 + normal(rng, 0.0, pulse_sigma) + exponential(rng, tau_ps));
    }
    auto det_rng = make_rng(seed, kDetectorStreamBase + kPulseBlockBase + b);
    detect(out, detector, det_rng);
  }

  const double dur = double(duration_ps);
  {
    const double signal_per_ps = excitation.pulse_excitation_prob / period;
    const double p = emitter.signal_fraction;
    auto rng = make_rng(seed, kBackgroundStream);
    sources[n_blocks] = poisson_process(signal_per_ps * (1.0 - p) / p, dur, rng);
    auto det_rng = make_rng(seed, kDetectorStreamBase + kBackgroundStream);
    detect(sources[n_blocks], detector, det_rng);
  }
  {
    auto rng = make_rng(seed, kDarkStream);
    sources[n_blocks + 1] = poisson_process(detector.dark_rate_cps / units::kPsPerS, dur, rng);
  }

  std::vector<std::vector<std::uint64_t>> channels{
      apply_dead_time(quantize_sorted(sources, duration_ps), detector.dead_time_ps())};
  return merge_channels(channels, duration_ps, std::move(origin));
}

TimeTagStream split_hbt(const TimeTagStream& stream, std::uint64_t seed,
                        std::optional<std::uint64_t> dead_time_ps) {
  if (stream.channel_count() > 1) {
    throw UsageError("split_hbt expects a single-channel stream, got " +
                     std::to_string(stream.channel_count()) + " channels");
  }
  std::uint64_t dead = 0;
  if (dead_time_ps) {
    dead = *dead_time_ps;
  } else if (stream.origin.contains("detector")) {
    dead = std::uint64_t(std::llround(stream.origin["detector"].value("dead_time_ns", 0.0) *
                                      units::kPsPerNs));
  }

  const auto channels = route_hbt(stream.channel_times(0), seed, dead);
  nlohmann::json origin = stream.origin;
  origin["split_hbt"] = {{"seed", seed}, {"dead_time_ps", dead}};
  return merge_channels(channels, stream.duration_ps, std::move(origin));
}

TimeTagStream simulate_hbt_stream(std::span<const Emitter> emitters,
                                  const ExcitationConfig& excitation,
                                  const DetectorConfig& detector, std::uint64_t duration_ps,
                                  std::uint64_t seed) {
  // Photons are routed before any dead time, so coincident arrivals from
  // different emitters can land on different detectors.
  if (excitation.mode != ExcitationMode::CW) {
    throw ConfigError("simulate_hbt_stream requires excitation.mode = cw");
  }
  excitation.validate();
  detector.validate();
  for (const auto& e : emitters) e.validate();
  const auto split_seed = derive_seed(seed, 0x5350);
  nlohmann::json origin = {{"producer", "simulate_hbt_stream"},
                           {"seed", seed},
                           {"emitters", emitters},
                           {"excitation", excitation},
                           {"detector", detector},
                           {"split_hbt", {{"seed", split_seed}, {"dead_time_ps", detector.dead_time_ps()}}}};
  if (duration_ps == 0) return TimeTagStream{{}, 0, origin};
  const auto times = cw_detections(emitters, excitation, detector, duration_ps, seed);
  return merge_channels(route_hbt(times, split_seed, detector.dead_time_ps()), duration_ps,
                        std::move(origin));
}

std::vector<TcspcBin> tcspc_histogram(const TimeTagStream& stream, double period_ps,
                                      double offset_ps, double bin_ps, double pre_window_ps,
                                      std::uint8_t channel) {
  if (!(period_ps > 0.0) || !(bin_ps > 0.0) || !(pre_window_ps >= 0.0) ||
      pre_window_ps >= period_ps) {
    throw ConfigError("tcspc_histogram: need period > pre_window >= 0 and bin > 0");
  }
  const auto nbins = std::size_t(std::floor(period_ps / bin_ps));
  std::vector<TcspcBin> h(nbins);
  for (std::size_t i = 0; i < nbins; ++i) h[i] = {-pre_window_ps + (double(i) + 0.5) * bin_ps, 0};
  for (const auto& t : stream.tags) {
    if (t.channel != channel) continue;
    double d = std::fmod(double(t.timestamp_ps) - offset_ps + pre_window_ps, period_ps);
    if (d < 0.0) d += period_ps;
    const auto i = std::size_t(d / bin_ps);
    if (i < nbins) ++h[i].counts;
  }
  return h;
}

}  // namespace photonlab
