#pragma once

#include "hq/common.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

// Little-endian binary helpers shared by the dataset, feature and model blobs.

namespace hq::io {

static_assert(std::endian::native == std::endian::little,
              "binary blobs are written in native order; big-endian hosts are not supported");

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write_array(std::ostream& out, const T* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T read(std::istream& in, std::string_view what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError("truncated input while reading " + std::string(what));
  }
  return value;
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
void read_array(std::istream& in, T* data, std::size_t n, std::string_view what) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)))) {
    throw DataError("truncated input while reading " + std::string(what));
  }
}

inline void write_magic(std::ostream& out, std::string_view magic, std::uint32_t version) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  write(out, version);
}

/// Checks the magic tag and returns the version; throws on mismatch or if the
/// version is newer than `max_version`.
inline std::uint32_t read_magic(std::istream& in, std::string_view magic, std::uint32_t max_version) {
  std::array<char, 8> buf{};
  if (magic.size() > buf.size() || !in.read(buf.data(), static_cast<std::streamsize>(magic.size())) ||
      std::string_view(buf.data(), magic.size()) != magic) {
    throw DataError("bad magic: expected " + std::string(magic));
  }
  const auto version = read<std::uint32_t>(in, "version");
  if (version == 0 || version > max_version) {
    throw DataError("unsupported " + std::string(magic) + " version " + std::to_string(version));
  }
  return version;
}

inline void write_string(std::ostream& out, std::string_view s) {
  write(out, static_cast<std::uint64_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::string_view what) {
  const auto n = read<std::uint64_t>(in, what);
  if (n > (1u << 20)) throw DataError("implausible string length in " + std::string(what));
  std::string s(n, '\0');
  read_array(in, s.data(), n, what);
  return s;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  write(out, static_cast<std::uint64_t>(m.rows()));
  write(out, static_cast<std::uint64_t>(m.cols()));
  write_array(out, m.data(), static_cast<std::size_t>(m.size()));
}

inline Matrix read_matrix(std::istream& in, std::string_view what) {
  const auto rows = read<std::uint64_t>(in, what);
  const auto cols = read<std::uint64_t>(in, what);
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw DataError("implausible matrix shape in " + std::string(what));
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  read_array(in, m.data(), static_cast<std::size_t>(m.size()), what);
  return m;
}

template <typename T>
void write_vector(std::ostream& out, const std::vector<T>& v) {
  write(out, static_cast<std::uint64_t>(v.size()));
  write_array(out, v.data(), v.size());
}

template <typename T>
std::vector<T> read_vector(std::istream& in, std::string_view what) {
  const auto n = read<std::uint64_t>(in, what);
  if (n > (1ULL << 34) / sizeof(T)) throw DataError("implausible array length in " + std::string(what));
  std::vector<T> v(n);
  read_array(in, v.data(), n, what);
  return v;
}

}  // namespace hq::io
