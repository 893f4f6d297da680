#pragma once

// Little-endian encode/decode helpers shared by the model and dataset formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "hifm/error.hpp"

namespace hifm::io {

template <class U>
void write_le(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  os.write(buf, sizeof(U));
}

inline void write_f64(std::ostream& os, double x) { write_le(os, std::bit_cast<std::uint64_t>(x)); }

template <class U>
U read_le(std::istream& is, const std::string& what) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw FormatError("truncated file while reading " + what);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
  return value;
}

inline double read_f64(std::istream& is, const std::string& what) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is, what));
}

inline void expect_magic(std::istream& is, const std::string& magic, const std::string& what) {
  std::string got(magic.size(), '\0');
  if (!is.read(got.data(), static_cast<std::streamsize>(got.size()))) throw FormatError("truncated " + what + " header");
  if (got != magic) throw FormatError("bad magic in " + what + " file (expected \"" + magic + "\")");
}

}  // namespace hifm::io
