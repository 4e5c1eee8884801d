#pragma once

#include <boost/crc.hpp>
#include <boost/endian/conversion.hpp>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wbnet/core/errors.hpp"

namespace wbnet::io {

// Blob layout, all little-endian:
//   "WBDS" | u16 version | u16 dtype | u32 rank | u64 dims[rank] | payload | u32 crc32
// The CRC covers every byte before it.

inline constexpr std::uint16_t kBlobVersion = 1;

enum class Dtype : std::uint16_t { f32 = 0, c64 = 1 };

enum class FormatErrc { io, magic, version, dtype, truncated, checksum, dims };

inline const char* to_string(FormatErrc e) {
  switch (e) {
    case FormatErrc::io: return "io";
    case FormatErrc::magic: return "bad_magic";
    case FormatErrc::version: return "unsupported_version";
    case FormatErrc::dtype: return "dtype_mismatch";
    case FormatErrc::truncated: return "truncated";
    case FormatErrc::checksum: return "checksum";
    case FormatErrc::dims: return "dim_mismatch";
  }
  return "?";
}

/// Container or blob that cannot be read back; `code` says why.
struct FormatError : DataError {
  FormatErrc code;
  FormatError(FormatErrc c, const std::string& what) : DataError(std::string(to_string(c)) + ": " + what), code(c) {}
};

template <class T>
struct DtypeOf;
template <>
struct DtypeOf<float> {
  static constexpr Dtype value = Dtype::f32;
};
template <>
struct DtypeOf<std::complex<float>> {
  static constexpr Dtype value = Dtype::c64;
};

template <class T>
struct Array {
  std::vector<std::uint64_t> dims;
  std::vector<T> values;

  std::size_t count() const {
    std::size_t c = 1;
    for (auto d : dims) c *= std::size_t(d);
    return c;
  }
};

namespace detail {

template <class U>
void put(std::string& out, U v) {
  boost::endian::native_to_little_inplace(v);
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class U>
U get(const std::string& in, std::size_t& pos, const std::string& path) {
  if (pos + sizeof(U) > in.size()) throw FormatError(FormatErrc::truncated, path);
  U v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return boost::endian::little_to_native(v);
}

inline std::uint32_t crc32(const char* p, std::size_t n) {
  boost::crc_32_type h;
  h.process_bytes(p, n);
  return h.checksum();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw FormatError(FormatErrc::io, "short write to " + path.string());
}

inline void put_scalar(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put(out, bits);
}

inline void put_scalar(std::string& out, std::complex<float> v) {
  put_scalar(out, v.real());
  put_scalar(out, v.imag());
}

inline void get_scalar(const std::string& in, std::size_t& pos, float& v, const std::string& path) {
  const auto bits = get<std::uint32_t>(in, pos, path);
  std::memcpy(&v, &bits, 4);
}

inline void get_scalar(const std::string& in, std::size_t& pos, std::complex<float>& v, const std::string& path) {
  float re, im;
  get_scalar(in, pos, re, path);
  get_scalar(in, pos, im, path);
  v = {re, im};
}

}  // namespace detail

/// Serialises an array; returns the CRC32 stored in its trailer.
template <class T>
std::uint32_t write_blob(const std::filesystem::path& path, const Array<T>& a) {
  if (a.count() != a.values.size()) throw ShapeError("blob dims do not match payload for " + path.string());
  std::string out = "WBDS";
  detail::put(out, kBlobVersion);
  detail::put(out, std::uint16_t(DtypeOf<T>::value));
  detail::put(out, std::uint32_t(a.dims.size()));
  for (auto d : a.dims) detail::put(out, std::uint64_t(d));
  out.reserve(out.size() + a.values.size() * sizeof(T) + 4);
  for (const T& v : a.values) detail::put_scalar(out, v);
  const std::uint32_t crc = detail::crc32(out.data(), out.size());
  detail::put(out, crc);
  detail::write_file(path, out);
  return crc;
}

struct BlobHeader {
  std::uint16_t version = 0;
  Dtype dtype = Dtype::f32;
  std::vector<std::uint64_t> dims;
  std::uint32_t crc = 0;
};

/// Reads and verifies a blob. `expected_dims`, when non-empty, must match the header.
template <class T>
Array<T> read_blob(const std::filesystem::path& path, const std::vector<std::uint64_t>& expected_dims = {},
                   BlobHeader* header = nullptr) {
  const std::string in = detail::read_file(path);
  const std::string name = path.string();
  if (in.size() < 4 || in.compare(0, 4, "WBDS") != 0) throw FormatError(FormatErrc::magic, name);
  std::size_t pos = 4;
  BlobHeader h;
  h.version = detail::get<std::uint16_t>(in, pos, name);
  if (h.version != kBlobVersion)
    throw FormatError(FormatErrc::version, name + " has format version " + std::to_string(h.version) + ", expected " +
                                               std::to_string(kBlobVersion));
  h.dtype = Dtype(detail::get<std::uint16_t>(in, pos, name));
  if (h.dtype != DtypeOf<T>::value)
    throw FormatError(FormatErrc::dtype, name + " has dtype code " + std::to_string(int(h.dtype)));
  const auto rank = detail::get<std::uint32_t>(in, pos, name);
  if (rank > 8) throw FormatError(FormatErrc::dims, name + " has rank " + std::to_string(rank));
  Array<T> a;
  for (std::uint32_t k = 0; k < rank; ++k) a.dims.push_back(detail::get<std::uint64_t>(in, pos, name));
  h.dims = a.dims;
  if (!expected_dims.empty() && a.dims != expected_dims) throw FormatError(FormatErrc::dims, name);
  const std::size_t count = a.count();
  if (in.size() != pos + count * sizeof(T) + 4)
    throw FormatError(FormatErrc::truncated, name + " is " + std::to_string(in.size()) + " bytes, header implies " +
                                                 std::to_string(pos + count * sizeof(T) + 4));
  std::size_t end = pos + count * sizeof(T);
  h.crc = detail::get<std::uint32_t>(in, end, name);
  if (h.crc != detail::crc32(in.data(), pos + count * sizeof(T))) throw FormatError(FormatErrc::checksum, name);
  a.values.resize(count);
  for (auto& v : a.values) detail::get_scalar(in, pos, v, name);
  if (header) *header = h;
  return a;
}

}  // namespace wbnet::io
