// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_BYTE_IO_HPP
#define GFTLATENT_BYTE_IO_HPP

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "gftlatent/error.hpp"

namespace gftl::byte_io {

// Little-endian scalar I/O for the binary formats (PLY, GFTL, JSGP).

template <typename T>
T from_le_bytes(const char* bytes) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf, buf + sizeof(T));
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf, buf + sizeof(T));
  }
  os.write(buf, sizeof(T));
}

/// Reads one little-endian scalar; throws Error(kParse) naming `what` on EOF.
template <typename T>
T read_le(std::istream& is, const char* what) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) {
    throw parse_error(std::string("truncated file while reading ") + what);
  }
  return from_le_bytes<T>(buf);
}

}  // namespace gftl::byte_io

#endif  // GFTLATENT_BYTE_IO_HPP
