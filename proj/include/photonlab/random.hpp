#pragma once

#include <cstdint>
#include <random>

namespace photonlab {

// All stochastic code draws from std::mt19937_64 (bit-exact by the C++
// standard) combined with Boost.Random distributions (header-only, identical
// on every platform). Independent substreams are keyed by SplitMix64 mixing
// of (seed, stream id), so work can be partitioned without changing results.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Seed for the substream `stream` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

// Draw helpers (thin wrappers over boost::random so call sites stay short).
double uniform01(Rng& rng);
double exponential(Rng& rng, double mean);
double normal(Rng& rng, double mean, double sigma);
std::uint64_t poisson(Rng& rng, double mean);
bool bernoulli(Rng& rng, double p);

}  // namespace photonlab
