#include "photonlab/random.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace photonlab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851f42d4c957f2dULL));
}

double uniform01(Rng& rng) { return boost::random::uniform_01<double>{}(rng); }

double exponential(Rng& rng, double mean) {
  return boost::random::exponential_distribution<double>{1.0 / mean}(rng);
}

double normal(Rng& rng, double mean, double sigma) {
  if (sigma <= 0.0) return mean;
  return boost::random::normal_distribution<double>{mean, sigma}(rng);
}

std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  // boost's poisson_distribution uses an int result type; large means go
  // through the 64-bit-wide variant.
  return boost::random::poisson_distribution<std::uint64_t, double>{mean}(rng);
}

bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return boost::random::bernoulli_distribution<double>{p}(rng);
}

}  // namespace photonlab
