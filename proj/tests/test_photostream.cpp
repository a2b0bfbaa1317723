#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "photonlab/error.hpp"
#include "photonlab/photostream.hpp"

using namespace photonlab;

namespace {

Emitter emitter(double tau_ns = 1.5, double p = 1.0) {
  Emitter e;
  e.excited_lifetime_ns = tau_ns;
  e.signal_fraction = p;
  return e;
}

ExcitationConfig cw(double k) {
  ExcitationConfig x;
  x.mode = ExcitationMode::CW;
  x.cw_excitation_rate_per_ns = k;
  return x;
}

ExcitationConfig pulsed(double prob, double width_ps = 130.0) {
  ExcitationConfig x;
  x.mode = ExcitationMode::Pulsed;
  x.pulse_period_ns = 50.0;
  x.pulse_excitation_prob = prob;
  x.pulse_width_ps = width_ps;
  x.pulse_offset_ns = 2.0;
  return x;
}

constexpr std::uint64_t kMs = 1'000'000'000ULL;  // ps

}  // namespace

TEST_CASE("degenerate inputs give empty streams") {
  const std::vector<Emitter> none;
  auto s = simulate_cw_stream(none, cw(1.0), {}, 10 * kMs, 1);
  CHECK(s.tags.empty());
  CHECK(s.duration_ps == 10 * kMs);
  CHECK(s.channel_count() == 0);

  const std::vector<Emitter> one{emitter()};
  auto z = simulate_cw_stream(one, cw(1.0), {}, 0, 1);
  CHECK(z.tags.empty());
  CHECK(z.duration_ps == 0);

  auto p = simulate_pulsed_stream(emitter(), pulsed(0.5), {}, 0, 1);
  CHECK(p.tags.empty());
}

TEST_CASE("invalid configurations are rejected") {
  const std::vector<Emitter> one{emitter()};
  DetectorConfig bad;
  bad.efficiency = 0.0;
  CHECK_THROWS_AS(simulate_cw_stream(one, cw(1.0), bad, kMs, 1), ConfigError);
  bad = {};
  bad.dead_time_ns = -1.0;
  CHECK_THROWS_AS(simulate_cw_stream(one, cw(1.0), bad, kMs, 1), ConfigError);
  CHECK_THROWS_AS(simulate_cw_stream(one, cw(0.0), {}, kMs, 1), ConfigError);
  CHECK_THROWS_AS(simulate_cw_stream(one, pulsed(0.1), {}, kMs, 1), ConfigError);
  CHECK_THROWS_AS(simulate_pulsed_stream(emitter(), cw(1.0), {}, 10, 1), ConfigError);
  CHECK_THROWS_AS(simulate_pulsed_stream(emitter(), pulsed(1.5), {}, 10, 1), ConfigError);
  auto e = emitter();
  e.signal_fraction = 0.0;
  const std::vector<Emitter> bad_e{e};
  CHECK_THROWS_AS(simulate_cw_stream(bad_e, cw(1.0), {}, kMs, 1), ConfigError);
}

TEST_CASE("closed-form emission rate agrees with the renewal-process oracle") {
  // 10⁶ simulated cycles of Exp(1/k) + Exp(τ): rate 0.400108 ± 0.00029 /ns
  CHECK(two_level_emission_rate_per_ns(1.0, 1.5) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(std::abs(two_level_emission_rate_per_ns(1.0, 1.5) - 0.400108) < 3 * 0.00029);
  CHECK(two_level_emission_rate_per_ns(0.2, 1.5) == doctest::Approx(0.2 / 1.3));
}

TEST_CASE("CW mean detection rate matches k/(1 + kτ)") {
  const std::vector<Emitter> one{emitter()};
  const auto s = simulate_cw_stream(one, cw(1.0), {}, 10 * kMs, 42);
  const double t_ns = 1e7;
  const double rate = two_level_emission_rate_per_ns(1.0, 1.5);
  // Renewal counting variance: t σ²/μ³ with μ = 1/k + τ, σ² = 1/k² + τ²
  const double mu = 2.5, var = 1.0 + 2.25;
  const double sigma = std::sqrt(t_ns * var / (mu * mu * mu));
  MESSAGE("counts " << s.tags.size() << " expected " << rate * t_ns << " sigma " << sigma);
  CHECK(std::abs(double(s.tags.size()) - rate * t_ns) < 3 * sigma);
  check_stream_invariants(s);
}

TEST_CASE("background share follows the signal fraction") {
  const std::vector<Emitter> one{emitter(1.5, 0.5)};
  const auto s = simulate_cw_stream(one, cw(1.0), {}, 10 * kMs, 3);
  const double expected = 2.0 * 0.4 * 1e7;
  CHECK(std::abs(double(s.tags.size()) - expected) < 5 * std::sqrt(expected));
}

TEST_CASE("dead time, ordering and bounds hold after detection") {
  DetectorConfig d;
  d.efficiency = 0.7;
  d.dark_rate_cps = 5e4;
  d.jitter_sigma_ps = 300.0;
  d.dead_time_ns = 22.0;
  const std::vector<Emitter> two{emitter(1.5, 0.8), emitter(1.5, 0.8)};
  const auto s = simulate_cw_stream(two, cw(1.0), d, 2 * kMs, 11);
  REQUIRE(s.tags.size() > 1000);
  CHECK_NOTHROW(check_stream_invariants(s, d.dead_time_ps()));
  const auto t = s.channel_times(0);
  for (std::size_t i = 1; i < t.size(); ++i) REQUIRE(t[i] - t[i - 1] >= 22000);
  CHECK(t.back() <= s.duration_ps);

  const auto p = simulate_pulsed_stream(emitter(), pulsed(0.9), d, 20000, 5);
  CHECK_NOTHROW(check_stream_invariants(p, d.dead_time_ps()));
}

TEST_CASE("apply_dead_time is the non-paralyzable filter") {
  const std::vector<std::uint64_t> t{0, 5, 10, 10, 12, 25, 26, 40};
  CHECK(apply_dead_time(t, 10) == std::vector<std::uint64_t>{0, 10, 25, 40});
  CHECK(apply_dead_time(t, 0) == std::vector<std::uint64_t>{0, 5, 10, 12, 25, 26, 40});
}

TEST_CASE("pulsed stream with zero excitation probability holds dark counts only") {
  const auto quiet = simulate_pulsed_stream(emitter(), pulsed(0.0), {}, 100000, 9);
  CHECK(quiet.tags.empty());
  DetectorConfig d;
  d.dark_rate_cps = 2000.0;
  const auto s = simulate_pulsed_stream(emitter(), pulsed(0.0), d, 100000, 9);
  const double expected = 2000.0 * 100000 * 50e-9;
  CHECK(std::abs(double(s.tags.size()) - expected) < 5 * std::sqrt(expected));
}

TEST_CASE("at most one emitter photon per pulse") {
  const auto s = simulate_pulsed_stream(emitter(), pulsed(1.0), {}, 20000, 21);
  std::vector<int> per_pulse(20001, 0);
  for (const auto& t : s.tags) ++per_pulse[std::size_t((double(t.timestamp_ps) - 2000.0 + 1000.0) / 50000.0)];
  CHECK(*std::max_element(per_pulse.begin(), per_pulse.end()) <= 1);
  CHECK(s.tags.size() > 19900);
}

TEST_CASE("ideal pulsed delays are exponential (Kolmogorov-Smirnov)") {
  const auto s = simulate_pulsed_stream(emitter(), pulsed(0.5, 0.0), {}, 100000, 77);
  std::vector<double> d;
  for (const auto& t : s.tags) {
    const double rel = double(t.timestamp_ps) - 2000.0;
    d.push_back(rel - std::floor(rel / 50000.0) * 50000.0);
  }
  std::sort(d.begin(), d.end());
  const double n = double(d.size());
  double D = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double F = 1.0 - std::exp(-d[i] / 1500.0);
    D = std::max({D, std::abs(F - double(i) / n), std::abs(double(i + 1) / n - F)});
  }
  MESSAGE("KS D = " << D << " for n = " << n);
  CHECK(D < 1.63 / std::sqrt(n));
}

TEST_CASE("pulsed decay slope is 1/1.5 per ns beyond the pulse") {
  const auto s = simulate_pulsed_stream(emitter(), pulsed(0.1), {}, 1000000, 8);
  const auto h = tcspc_histogram(s, 50000.0, 2000.0, 100.0, 2000.0);
  // weighted regression of log counts on delay, weights = counts
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& b : h) {
    if (b.delay_ps < 1000.0 || b.delay_ps > 12000.0 || b.counts < 20) continue;
    const double w = double(b.counts), x = b.delay_ps / 1000.0, y = std::log(double(b.counts));
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double det = sw * sxx - sx * sx;
  const double slope = (sw * sxy - sx * sy) / det;
  const double se = std::sqrt(sw / det);
  MESSAGE("slope " << slope << " +- " << se);
  CHECK(std::abs(slope + 1.0 / 1.5) < 4 * se);
  CHECK(std::abs(slope + 1.0 / 1.5) < 0.02);
}

TEST_CASE("tcspc histogram folds delays around each pulse") {
  TimeTagStream s;
  s.duration_ps = 200000;
  for (std::uint64_t t : {1500ULL, 2000ULL, 2150ULL, 52100ULL, 101999ULL}) s.tags.push_back({t, 0});
  const auto h = tcspc_histogram(s, 50000.0, 2000.0, 100.0, 1000.0);
  REQUIRE(h.size() == 500);
  CHECK(h[0].delay_ps == doctest::Approx(-950.0));
  CHECK(h[5].counts == 1);   // −500 ps
  CHECK(h[10].counts == 1);  // 0
  CHECK(h[11].counts == 2);  // 150 and 100
  CHECK(h[9].counts == 1);   // −1 ps
  CHECK_THROWS_AS(tcspc_histogram(s, 50000.0, 0.0, 100.0, 60000.0), ConfigError);
}

TEST_CASE("split_hbt") {
  const std::vector<Emitter> one{emitter()};
  const auto s = simulate_cw_stream(one, cw(1.0), {}, 2 * kMs, 5);
  const double n = double(s.tags.size());

  SUBCASE("routing conserves tags without dead time") {
    const auto h = split_hbt(s, 17, 0);
    CHECK(h.channel_count() == 2);
    CHECK(h.count(0) + h.count(1) == s.tags.size());
    CHECK(std::abs(double(h.count(0)) / n - 0.5) < 3.0 / (2.0 * std::sqrt(n)));
    check_stream_invariants(h);
  }
  SUBCASE("deterministic") {
    const auto a = split_hbt(s, 17, 10000);
    const auto b = split_hbt(s, 17, 10000);
    CHECK(a.tags == b.tags);
    CHECK_NOTHROW(check_stream_invariants(a, 10000));
    CHECK(split_hbt(s, 18, 10000).tags != a.tags);
  }
  SUBCASE("multi-channel input is a usage error") {
    const auto h = split_hbt(s, 1, 0);
    CHECK_THROWS_AS(split_hbt(h, 2), UsageError);
  }
  SUBCASE("hbt simulation applies dead time per detector") {
    DetectorConfig d;
    d.dead_time_ns = 50.0;
    const auto h = simulate_hbt_stream(one, cw(1.0), d, kMs, 5);
    CHECK(h.channel_count() == 2);
    CHECK_NOTHROW(check_stream_invariants(h, d.dead_time_ps()));
  }
}

TEST_CASE("streams are deterministic and independent of the thread count") {
  const std::vector<Emitter> three{emitter(1.5, 0.806), emitter(1.2, 0.9), emitter(2.0, 0.7)};
  DetectorConfig d;
  d.efficiency = 0.6;
  d.jitter_sigma_ps = 40.0;
  d.dark_rate_cps = 300.0;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = simulate_cw_stream(three, cw(0.3), d, kMs, 99);
  const auto pa = simulate_pulsed_stream(emitter(), pulsed(0.2), d, 300000, 99);
  omp_set_num_threads(4);
  const auto b = simulate_cw_stream(three, cw(0.3), d, kMs, 99);
  const auto pb = simulate_pulsed_stream(emitter(), pulsed(0.2), d, 300000, 99);
  omp_set_num_threads(saved);
  CHECK(a.tags == b.tags);
  CHECK(pa.tags == pb.tags);
  CHECK(a.origin["seed"] == 99);
  CHECK(simulate_cw_stream(three, cw(0.3), d, kMs, 100).tags != a.tags);
}

TEST_CASE("CW stationarity: halves agree within 4 sigma") {
  const std::vector<Emitter> one{emitter(1.5, 0.806)};
  const auto s = simulate_cw_stream(one, cw(0.2), {}, 10 * kMs, 13);
  const auto half = s.duration_ps / 2;
  const double first = double(std::count_if(s.tags.begin(), s.tags.end(),
                                            [&](const TimeTag& t) { return t.timestamp_ps < half; }));
  const double second = double(s.tags.size()) - first;
  CHECK(std::abs(first - second) < 4.0 * std::sqrt(first + second));
}

TEST_CASE("PTAG1 and CSV round trips") {
  const std::vector<Emitter> one{emitter()};
  DetectorConfig d;
  d.dead_time_ns = 22.0;
  const auto s = split_hbt(simulate_cw_stream(one, cw(1.0), d, kMs / 10, 4), 4);

  std::stringstream buf;
  write_ptag(buf, s);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 24 + 9 * s.tags.size());
  CHECK(bytes.compare(0, 8, std::string(kPtagMagic, 8)) == 0);
  CHECK(bytes[8] == 1);
  const auto back = read_ptag(buf);
  CHECK(back.tags == s.tags);

  std::stringstream again;
  write_ptag(again, back);
  CHECK(again.str() == bytes);

  const auto dir = std::filesystem::temp_directory_path() / "photonlab_test_ptag";
  std::filesystem::create_directories(dir);
  save_stream(dir / "s.ptag", s);
  CHECK(std::filesystem::exists(dir / "s.ptag.json"));
  const auto loaded = load_stream(dir / "s.ptag");
  CHECK(loaded.tags == s.tags);
  CHECK(loaded.duration_ps == s.duration_ps);
  CHECK(loaded.origin["seed"] == 4);
  std::filesystem::remove_all(dir);

  std::stringstream csv;
  write_stream_csv(csv, s);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "timestamp_ps,channel");
  std::getline(csv, line);
  CHECK(line == std::to_string(s.tags[0].timestamp_ps) + "," + std::to_string(int(s.tags[0].channel)));

  std::stringstream junk("PTAG2\0\0\0 and more bytes here");
  CHECK_THROWS_AS(read_ptag(junk), FormatError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(read_ptag(truncated), FormatError);
}
