#include "photonlab/kernels/correlate.hpp"

#include <algorithm>
#include <cstdlib>

namespace photonlab::kernels {

std::int64_t delay_bin(std::int64_t d, std::int64_t w) {
  const std::int64_t ad = std::llabs(d);
  if (2 * ad <= w) return 0;
  const std::int64_t k = (2 * ad - w + 2 * w - 1) / (2 * w);
  return d < 0 ? -k : k;
}

std::int64_t bin_span_ps(std::int64_t k, std::int64_t w) {
  k = std::llabs(k);
  if (k == 0) return 2 * (w / 2) + 1;
  // floor((2k+1)w/2) − floor((2k−1)w/2)
  return ((2 * k + 1) * w) / 2 - ((2 * k - 1) * w) / 2;
}

namespace {

// Histograms pairs for a[first, last) against all of b.
void correlate_range(std::span<const std::uint64_t> a, std::size_t first, std::size_t last,
                     std::span<const std::uint64_t> b, std::int64_t w, std::int64_t max_bin,
                     std::vector<std::uint64_t>& hist) {
  const std::int64_t reach = max_bin * w + w / 2 + 1;
  auto lo = b.begin();
  if (first < last) {
    const auto t0 = std::int64_t(a[first]);
    lo = std::lower_bound(b.begin(), b.end(),
                          std::uint64_t(std::max<std::int64_t>(0, t0 - reach)));
  }
  for (std::size_t i = first; i < last; ++i) {
    const auto t = std::int64_t(a[i]);
    while (lo != b.end() && std::int64_t(*lo) < t - reach) ++lo;
    for (auto it = lo; it != b.end(); ++it) {
      const std::int64_t d = std::int64_t(*it) - t;
      if (d > reach) break;
      const std::int64_t k = delay_bin(d, w);
      if (k < -max_bin || k > max_bin) continue;
      ++hist[std::size_t(k + max_bin)];
    }
  }
}

}  // namespace

std::vector<std::uint64_t> cross_correlate_serial(std::span<const std::uint64_t> a,
                                                  std::span<const std::uint64_t> b,
                                                  std::int64_t w, std::int64_t max_bin) {
  std::vector<std::uint64_t> hist(std::size_t(2 * max_bin + 1), 0);
  correlate_range(a, 0, a.size(), b, w, max_bin, hist);
  return hist;
}

std::vector<std::uint64_t> cross_correlate_omp(std::span<const std::uint64_t> a,
                                               std::span<const std::uint64_t> b,
                                               std::int64_t w, std::int64_t max_bin) {
  const std::size_t nbins = std::size_t(2 * max_bin + 1);
  constexpr std::size_t kChunk = 1 << 15;
  const std::size_t n_chunks = (a.size() + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> hist(nbins, 0);

#pragma omp parallel
  {
    std::vector<std::uint64_t> local(nbins, 0);
#pragma omp for schedule(dynamic) nowait
    for (std::size_t c = 0; c < n_chunks; ++c) {
      correlate_range(a, c * kChunk, std::min(a.size(), (c + 1) * kChunk), b, w, max_bin, local);
    }
#pragma omp critical
    for (std::size_t k = 0; k < nbins; ++k) hist[k] += local[k];
  }
  return hist;
}

}  // namespace photonlab::kernels
