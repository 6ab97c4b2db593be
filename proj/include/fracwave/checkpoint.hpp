#pragma once

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "fracwave/errors.hpp"
#include "fracwave/field.hpp"
#include "fracwave/grid.hpp"
#include "fracwave/timestepper.hpp"

namespace fracwave {

// Layout, all integers and floats little-endian:
//   "FWCK" | u32 version | f64 L | u64 N | f64 t | u64 step_count
//   | N x f64 u | u64 H | H x (f64 t, f64 min_slope)
//   | u64 M | M bytes metadata | u32 CRC-32 of everything before it
inline constexpr std::array<char, 4> kCheckpointMagic{'F', 'W', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Kind { io, bad_magic, truncated, checksum, version, corrupt };

  CheckpointError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// A checkpointed state plus an opaque metadata blob (the CLI stores the
/// run configuration there).
struct Checkpoint {
  SimulationState state;
  std::string metadata;
};

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const unsigned char* data, std::size_t size) : p_(data), end_(data + size) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += n;
    return v;
  }
  const unsigned char* p_;
  const unsigned char* end_;
};

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const SimulationState& s,
                                                    std::string_view metadata = {}) {
  detail::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic.data(), kCheckpointMagic.size()));
  w.u32(kCheckpointVersion);
  w.f64(s.u.grid().length());
  w.u64(s.u.size());
  w.f64(s.t);
  w.u64(s.step_count);
  for (double v : s.u.values()) w.f64(v);
  w.u64(s.min_slope_history.size());
  for (const auto& h : s.min_slope_history) {
    w.f64(h.t);
    w.f64(h.min_slope);
  }
  w.u64(metadata.size());
  w.raw(metadata);
  const std::uint32_t crc = detail::crc32_of(w.bytes().data(), w.bytes().size());
  w.u32(crc);
  return std::move(w.bytes());
}

inline Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  using Kind = CheckpointError::Kind;
  if (bytes.size() < kCheckpointMagic.size() + 4)
    throw CheckpointError(Kind::truncated, "checkpoint too short");
  if (std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0)
    throw CheckpointError(Kind::bad_magic, "not a checkpoint file (bad magic)");
  const std::size_t body = bytes.size() - 4;
  detail::ByteReader tail(bytes.data() + body, 4);
  if (detail::crc32_of(bytes.data(), body) != tail.u32())
    throw CheckpointError(Kind::checksum, "checkpoint checksum mismatch (truncated or corrupt)");

  detail::ByteReader r(bytes.data() + kCheckpointMagic.size(), body - kCheckpointMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(Kind::version, "unsupported checkpoint version " + std::to_string(version));
  const double length = r.f64();
  const std::uint64_t n = r.u64();
  if (n > r.remaining() / 8) throw CheckpointError(Kind::corrupt, "checkpoint grid size is implausible");
  Grid grid = [&] {
    try {
      return Grid(length, static_cast<std::size_t>(n));
    } catch (const ParameterError& e) {
      throw CheckpointError(Kind::corrupt, std::string("checkpoint grid invalid: ") + e.what());
    }
  }();
  const double t = r.f64();
  const std::uint64_t steps = r.u64();
  RealField u(grid);
  for (auto& v : u.values()) v = r.f64();
  SimulationState s(std::move(u), t);
  s.step_count = steps;
  const std::uint64_t h = r.u64();
  if (h > r.remaining() / 16) throw CheckpointError(Kind::corrupt, "checkpoint history size is implausible");
  s.min_slope_history.reserve(h);
  for (std::uint64_t i = 0; i < h; ++i) {
    const double ht = r.f64();
    s.min_slope_history.push_back({ht, r.f64()});
  }
  const std::uint64_t m = r.u64();
  std::string metadata = r.raw(static_cast<std::size_t>(m));
  if (r.remaining() != 0) throw CheckpointError(Kind::corrupt, "trailing bytes in checkpoint");
  return {std::move(s), std::move(metadata)};
}

inline void checkpoint_write(const SimulationState& s, const std::filesystem::path& path,
                             std::string_view metadata = {}) {
  const auto bytes = encode_checkpoint(s, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "write failed for " + path.string());
}

inline Checkpoint checkpoint_read_full(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

inline SimulationState checkpoint_read(const std::filesystem::path& path) {
  return checkpoint_read_full(path).state;
}

}  // namespace fracwave
