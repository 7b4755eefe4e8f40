#pragma once

// EEGT container: one float32 tensor per file, little-endian throughout.
//
//   offset  size       field
//   0       4          magic "EEGT"
//   4       2          version (u16) = 1
//   6       1          dtype (u8), 0 = float32
//   7       1          ndim (u8)
//   8       4 * ndim   dims (u32 each)
//   ...     4 * prod   payload, row-major

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hybil/core/error.hpp"
#include "hybil/core/tensor.hpp"

namespace hybil {

inline constexpr char kTensorMagic[4] = {'E', 'E', 'G', 'T'};
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.rank() > 255) throw FormatError("tensor rank " + std::to_string(t.rank()) + " exceeds 255");
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * t.rank() + 4 * t.size());
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  detail::put_le(out, kTensorVersion, 2);
  detail::put_le(out, kDtypeFloat32, 1);
  detail::put_le(out, t.rank(), 1);
  for (auto d : t.shape()) {
    if (d > 0xFFFFFFFFu) throw FormatError("dimension " + std::to_string(d) + " does not fit in u32");
    detail::put_le(out, d, 4);
  }
  for (float v : t.data()) detail::put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  return out;
}

inline Tensor decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& source = "buffer") {
  auto fail = [&](const std::string& why) { return FormatError(source + ": " + why); };
  if (bytes.size() < 8) throw fail("truncated header, " + std::to_string(bytes.size()) + " bytes");
  if (!std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin())) {
    throw fail("bad magic \"" + std::string(bytes.begin(), bytes.begin() + 4) + "\", expected \"EEGT\"");
  }
  const auto version = detail::get_le(bytes.data() + 4, 2);
  if (version != kTensorVersion) throw fail("unsupported version " + std::to_string(version));
  const auto dtype = bytes[6];
  if (dtype != kDtypeFloat32) throw fail("unsupported dtype " + std::to_string(dtype));
  const std::size_t ndim = bytes[7];
  const std::size_t header = 8 + 4 * ndim;
  if (bytes.size() < header) throw fail("truncated header, dims need " + std::to_string(header) + " bytes");
  Shape shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    shape[i] = static_cast<std::size_t>(detail::get_le(bytes.data() + 8 + 4 * i, 4));
    if (shape[i] == 0) throw fail("zero extent in dimension " + std::to_string(i));
  }
  const std::size_t expected = 4 * shape_size(shape);
  const std::size_t got = bytes.size() - header;
  if (got < expected) {
    throw fail("truncated payload: expected " + std::to_string(expected) + " bytes, got " + std::to_string(got));
  }
  if (got > expected) {
    throw fail("trailing data: expected " + std::to_string(expected) + " bytes, got " + std::to_string(got));
  }
  std::vector<float> data(shape_size(shape));
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(bytes.data() + header + 4 * i, 4)));
  }
  return Tensor(std::move(shape), std::move(data));
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

inline void write_tensor(const std::filesystem::path& path, const Tensor& t) { write_bytes(path, encode_tensor(t)); }

inline Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_bytes(path), path.string()); }

}  // namespace hybil
