#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace photonlab::kernels {

// Delay bins are centered on k·w for k ∈ [−K, K]. Bin 0 is the closed
// interval [−w/2, w/2]; bin k > 0 is (k·w − w/2, k·w + w/2] and bin −k its
// mirror image, so swapping the two channels mirrors the histogram exactly.
std::int64_t delay_bin(std::int64_t delay_ps, std::int64_t bin_width_ps);

// Number of integer-picosecond delays that fall into bin k.
std::int64_t bin_span_ps(std::int64_t k, std::int64_t bin_width_ps);

// Counts of all pairs (a, b) with delay b − a binned as above. Result has
// 2K + 1 entries, index k + K. Both inputs must be sorted ascending.
std::vector<std::uint64_t> cross_correlate_serial(std::span<const std::uint64_t> a,
                                                  std::span<const std::uint64_t> b,
                                                  std::int64_t bin_width_ps,
                                                  std::int64_t max_bin);

// Same result as the serial kernel; `a` is partitioned into fixed chunks
// whose histograms are summed.
std::vector<std::uint64_t> cross_correlate_omp(std::span<const std::uint64_t> a,
                                               std::span<const std::uint64_t> b,
                                               std::int64_t bin_width_ps, std::int64_t max_bin);

}  // namespace photonlab::kernels
