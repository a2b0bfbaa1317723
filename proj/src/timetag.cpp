#include "photonlab/timetag.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "photonlab/error.hpp"

namespace photonlab {

static_assert(std::endian::native == std::endian::little,
              "PTAG1 I/O assumes a little-endian host");

int TimeTagStream::channel_count() const {
  int n = 0;
  for (const auto& t : tags) n = std::max(n, int(t.channel) + 1);
  return n;
}

std::vector<std::uint64_t> TimeTagStream::channel_times(std::uint8_t channel) const {
  std::vector<std::uint64_t> out;
  for (const auto& t : tags) {
    if (t.channel == channel) out.push_back(t.timestamp_ps);
  }
  return out;
}

std::size_t TimeTagStream::count(std::uint8_t channel) const {
  return std::size_t(std::count_if(tags.begin(), tags.end(),
                                   [&](const TimeTag& t) { return t.channel == channel; }));
}

TimeTagStream merge_channels(std::span<const std::vector<std::uint64_t>> channels,
                             std::uint64_t duration_ps, nlohmann::json origin) {
  TimeTagStream s;
  s.duration_ps = duration_ps;
  s.origin = origin.is_null() ? nlohmann::json::object() : std::move(origin);
  std::size_t total = 0;
  for (const auto& c : channels) total += c.size();
  s.tags.reserve(total);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    for (auto t : channels[c]) s.tags.push_back({t, std::uint8_t(c)});
  }
  std::sort(s.tags.begin(), s.tags.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps
                                            : a.channel < b.channel;
  });
  return s;
}

void check_stream_invariants(const TimeTagStream& s, std::uint64_t dead_time_ps) {
  std::array<std::int64_t, 256> last;
  last.fill(-1);
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < s.tags.size(); ++i) {
    const auto& t = s.tags[i];
    if (t.timestamp_ps > s.duration_ps) {
      throw UsageError("tag " + std::to_string(i) + " lies beyond the stream duration");
    }
    if (t.timestamp_ps < prev) throw UsageError("tags are not time ordered");
    prev = t.timestamp_ps;
    auto& l = last[t.channel];
    if (l >= 0) {
      const auto gap = t.timestamp_ps - std::uint64_t(l);
      if (gap == 0) throw UsageError("duplicate timestamp within channel");
      if (dead_time_ps > 0 && gap < dead_time_ps) {
        throw UsageError("tags closer than the detector dead time");
      }
    }
    l = std::int64_t(t.timestamp_ps);
  }
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("PTAG1: truncated file");
  return v;
}

}  // namespace

void write_ptag(std::ostream& out, const TimeTagStream& s) {
  out.write(kPtagMagic, sizeof(kPtagMagic));
  put<std::uint32_t>(out, kPtagVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, s.tags.size());
  std::vector<char> buf(s.tags.size() * 9);
  char* p = buf.data();
  for (const auto& t : s.tags) {
    std::memcpy(p, &t.timestamp_ps, 8);
    p[8] = char(t.channel);
    p += 9;
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw IoError("PTAG1: write failed");
}

TimeTagStream read_ptag(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in) throw FormatError("PTAG1: file too short for header (expected PTAG1 time-tag file)");
  if (std::memcmp(magic, kPtagMagic, 8) != 0) {
    throw FormatError("not a PTAG1 time-tag file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kPtagVersion) {
    throw FormatError("PTAG1: unsupported version " + std::to_string(version));
  }
  (void)get<std::uint32_t>(in);
  const auto n = get<std::uint64_t>(in);
  TimeTagStream s;
  std::vector<char> buf(n * 9);
  in.read(buf.data(), std::streamsize(buf.size()));
  if (std::uint64_t(in.gcount()) != n * 9) throw FormatError("PTAG1: truncated tag block");
  s.tags.resize(n);
  const char* p = buf.data();
  for (auto& t : s.tags) {
    std::memcpy(&t.timestamp_ps, p, 8);
    t.channel = std::uint8_t(p[8]);
    p += 9;
  }
  s.duration_ps = s.tags.empty() ? 0 : s.tags.back().timestamp_ps;
  return s;
}

nlohmann::json stream_sidecar(const TimeTagStream& s) {
  return {{"format", "PTAG1"},
          {"version", kPtagVersion},
          {"duration_ps", s.duration_ps},
          {"tag_count", s.tags.size()},
          {"origin", s.origin}};
}

void save_stream(const std::filesystem::path& path, const TimeTagStream& s) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_ptag(out, s);
  }
  std::ofstream side(path.string() + ".json");
  if (!side) throw IoError("cannot write sidecar for " + path.string());
  side << stream_sidecar(s).dump(2) << '\n';
}

TimeTagStream load_stream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto s = read_ptag(in);
  std::ifstream side(path.string() + ".json");
  if (side) {
    nlohmann::json j;
    try {
      side >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("malformed PTAG1 sidecar: " + std::string(e.what()));
    }
    s.duration_ps = j.value("duration_ps", s.duration_ps);
    if (j.contains("origin")) s.origin = j["origin"];
  }
  return s;
}

void write_stream_csv(std::ostream& out, const TimeTagStream& s) {
  out << "timestamp_ps,channel\n";
  for (const auto& t : s.tags) out << t.timestamp_ps << ',' << int(t.channel) << '\n';
}

}  // namespace photonlab
