#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ausam/error.hpp"
#include "ausam/model.hpp"

namespace ausam {

// Little-endian byte helpers shared by the binary formats.
namespace le {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), b.size());
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), b.size());
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_uint(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_uint(p, 8)); }

}  // namespace le

// Checkpoint layout (16-byte header, then d little-endian float64 values):
//   bytes 0..8   "AUSAMCKPT"
//   byte  9      version (1)
//   bytes 10..11 reserved, zero
//   bytes 12..15 d, unsigned 32-bit little-endian
inline constexpr char kCheckpointMagic[] = "AUSAMCKPT";
inline constexpr std::uint8_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderSize = 16;

inline void write_checkpoint(std::ostream& os, const ParamVector& w) {
  os.write(kCheckpointMagic, 9);
  os.put(static_cast<char>(kCheckpointVersion));
  os.put('\0');
  os.put('\0');
  le::put_u32(os, static_cast<std::uint32_t>(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) le::put_f64(os, w[i]);
  if (!os) throw Error("failed writing checkpoint");
}

inline ParamVector read_checkpoint(std::istream& is) {
  std::array<unsigned char, kCheckpointHeaderSize> hdr{};
  is.read(reinterpret_cast<char*>(hdr.data()), hdr.size());
  if (is.gcount() != static_cast<std::streamsize>(hdr.size())) throw FormatError("checkpoint: truncated header");
  if (std::memcmp(hdr.data(), kCheckpointMagic, 9) != 0) throw FormatError("checkpoint: bad magic");
  if (hdr[9] != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(hdr[9]));
  const auto d = static_cast<std::size_t>(le::get_uint(hdr.data() + 12, 4));
  std::vector<unsigned char> body(d * 8);
  is.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (is.gcount() != static_cast<std::streamsize>(body.size())) throw FormatError("checkpoint: truncated body");
  ParamVector w(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) w[static_cast<Eigen::Index>(i)] = le::get_f64(body.data() + 8 * i);
  return w;
}

inline void save_checkpoint(const std::filesystem::path& path, const ParamVector& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(os, w);
}

inline ParamVector load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace ausam
