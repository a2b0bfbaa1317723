#include "photonlab/correlation.hpp"

#include <cmath>
#include <string>

#include "photonlab/csv.hpp"
#include "photonlab/error.hpp"
#include "photonlab/kernels/correlate.hpp"

namespace photonlab {

namespace {

void fill_expected(CorrelationHistogram& h, double n0, double n1) {
  const auto K = std::int64_t(h.bins.size() / 2);
  const double T = h.duration_ps;
  for (std::int64_t k = -K; k <= K; ++k) {
    auto& b = h.bins[std::size_t(k + K)];
    b.tau_ps = double(k * h.bin_width_ps);
    const double span = double(kernels::bin_span_ps(k, h.bin_width_ps));
    b.expected = n0 * n1 / (T * T) * span * std::max(T - std::abs(b.tau_ps), 0.0);
    b.g2 = b.expected > 0.0 ? double(b.raw) / b.expected : 0.0;
  }
}

}  // namespace

CorrelationHistogram compute_g2(const TimeTagStream& stream, std::int64_t bin_width_ps,
                                std::int64_t max_tau_ps, Parallelism mode) {
  if (bin_width_ps <= 0) throw UsageError("compute_g2: bin width must be positive");
  if (max_tau_ps < 0) throw UsageError("compute_g2: max_tau must be non-negative");
  if (stream.channel_count() > 2) {
    throw UsageError("compute_g2: expected a two-channel stream, got " +
                     std::to_string(stream.channel_count()) + " channels");
  }
  const auto t0 = stream.channel_times(0);
  const auto t1 = stream.channel_times(1);
  if (t0.empty() || t1.empty()) {
    throw EstimationError("compute_g2: channel " + std::string(t0.empty() ? "0" : "1") +
                          " is empty (" + std::to_string(t0.size()) + " / " +
                          std::to_string(t1.size()) + " tags); cannot normalize g2");
  }
  if (stream.duration_ps == 0) throw EstimationError("compute_g2: zero stream duration");

  const std::int64_t K = max_tau_ps / bin_width_ps;
  const auto counts = mode == Parallelism::OpenMP
                          ? kernels::cross_correlate_omp(t0, t1, bin_width_ps, K)
                          : kernels::cross_correlate_serial(t0, t1, bin_width_ps, K);

  CorrelationHistogram h;
  h.bin_width_ps = bin_width_ps;
  h.duration_ps = double(stream.duration_ps);
  h.rate0_per_ps = double(t0.size()) / h.duration_ps;
  h.rate1_per_ps = double(t1.size()) / h.duration_ps;
  h.bins.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) h.bins[i].raw = counts[i];
  fill_expected(h, double(t0.size()), double(t1.size()));
  h.provenance = {{"producer", "compute_g2"}, {"source", stream.origin}};
  return h;
}

EmitterCount estimate_emitter_count(double contrast, double signal_fraction,
                                    double contrast_sigma) {
  if (!(contrast > 0.0 && contrast <= 1.0)) {
    throw DomainError("estimate_emitter_count: contrast must lie in (0, 1]");
  }
  if (!(signal_fraction > 0.0 && signal_fraction <= 1.0)) {
    throw DomainError("estimate_emitter_count: signal fraction must lie in (0, 1]");
  }
  const double p2 = signal_fraction * signal_fraction;
  const double slack = std::max(3.0 * contrast_sigma, 1e-3 * p2);
  if (contrast - p2 > slack) {
    throw InconsistencyError("contrast " + std::to_string(contrast) +
                             " exceeds signal_fraction^2 = " + std::to_string(p2) +
                             "; impossible under the background-dilution model");
  }
  const double n = p2 / contrast;
  return {n, std::max(1, int(std::lround(n)))};
}

void write_g2_csv(std::ostream& out, const CorrelationHistogram& h) {
  csv::Table t;
  t.provenance = h.provenance;
  t.provenance["normalization"] = {{"bin_width_ps", h.bin_width_ps},
                                   {"rate0_per_ps", h.rate0_per_ps},
                                   {"rate1_per_ps", h.rate1_per_ps},
                                   {"duration_ps", h.duration_ps}};
  t.columns = {"tau_ps", "g2", "raw"};
  for (const auto& b : h.bins) t.rows.push_back({b.tau_ps, b.g2, double(b.raw)});
  csv::write(out, t);
}

CorrelationHistogram read_g2_csv(std::istream& in) {
  auto t = csv::read(in, {"tau_ps", "g2", "raw"}, "g2 histogram");
  if (!t.provenance.contains("normalization")) {
    throw FormatError("g2 histogram: provenance lacks normalization metadata");
  }
  if (t.rows.size() % 2 != 1) throw FormatError("g2 histogram: bins must be symmetric about 0");
  const auto& n = t.provenance["normalization"];
  CorrelationHistogram h;
  h.bin_width_ps = n.at("bin_width_ps").get<std::int64_t>();
  h.rate0_per_ps = n.at("rate0_per_ps").get<double>();
  h.rate1_per_ps = n.at("rate1_per_ps").get<double>();
  h.duration_ps = n.at("duration_ps").get<double>();
  h.provenance = t.provenance;
  h.provenance.erase("normalization");
  h.bins.resize(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i][2] < 0.0) throw FormatError("g2 histogram: negative raw count");
    h.bins[i].raw = std::uint64_t(std::llround(t.rows[i][2]));
  }
  fill_expected(h, h.rate0_per_ps * h.duration_ps, h.rate1_per_ps * h.duration_ps);
  // Keep the file's g2 column verbatim for exact round trips.
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    h.bins[i].tau_ps = t.rows[i][0];
    h.bins[i].g2 = t.rows[i][1];
  }
  return h;
}

}  // namespace photonlab
