#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

namespace photonlab {

struct TimeTag {
  std::uint64_t timestamp_ps;
  std::uint8_t channel;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

// Ordered photon detection record. Tags are sorted by (timestamp, channel);
// within one channel timestamps are strictly increasing and lie in
// [0, duration_ps].
struct TimeTagStream {
  std::vector<TimeTag> tags;
  std::uint64_t duration_ps = 0;
  nlohmann::json origin = nlohmann::json::object();  // seed, configs, producer

  // 1 + highest channel present (0 for an empty stream).
  int channel_count() const;
  std::vector<std::uint64_t> channel_times(std::uint8_t channel) const;
  std::size_t count(std::uint8_t channel) const;
};

// Builds a stream from per-channel sorted timestamp lists.
TimeTagStream merge_channels(std::span<const std::vector<std::uint64_t>> channels,
                             std::uint64_t duration_ps, nlohmann::json origin = {});

// Throws UsageError if any stream invariant is violated. `dead_time_ps` > 0
// additionally checks the per-channel minimum spacing.
void check_stream_invariants(const TimeTagStream& s, std::uint64_t dead_time_ps = 0);

// PTAG1 binary layout (little endian):
//   [0,8)   magic "PTAG1\0\0\0"
//   [8,12)  u32 format version (1)
//   [12,16) u32 reserved (0)
//   [16,24) u64 tag count
//   then count × { u64 timestamp_ps, u8 channel } packed (9 bytes each)
// Duration and provenance travel in a JSON sidecar next to the file.
inline constexpr char kPtagMagic[8] = {'P', 'T', 'A', 'G', '1', '\0', '\0', '\0'};
inline constexpr std::uint32_t kPtagVersion = 1;

void write_ptag(std::ostream& out, const TimeTagStream& s);
TimeTagStream read_ptag(std::istream& in);

// Writes `path` and `path` + ".json" (sidecar).
void save_stream(const std::filesystem::path& path, const TimeTagStream& s);
// Reads `path`; the sidecar is optional (duration falls back to the last tag).
TimeTagStream load_stream(const std::filesystem::path& path);

// CSV: header `timestamp_ps,channel`.
void write_stream_csv(std::ostream& out, const TimeTagStream& s);

nlohmann::json stream_sidecar(const TimeTagStream& s);

}  // namespace photonlab
