#pragma once

// Little-endian readers/writers shared by the dataset and weights formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "okd/errors.hpp"

namespace okd::detail {

template <typename U>
void put_le_bits(std::ostream& os, U bits) {
  unsigned char buf[sizeof(U)];
  for (size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu);
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_le_bits(std::istream& is) {
  unsigned char buf[sizeof(U)];
  is.read(reinterpret_cast<char*>(buf), sizeof(U));
  if (!is) throw FormatError("unexpected end of file");
  U bits = 0;
  for (size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return bits;
}

template <typename T>
void write_le(std::ostream& os, T value) {
  if constexpr (std::is_same_v<T, double>) {
    put_le_bits(os, std::bit_cast<std::uint64_t>(value));
  } else if constexpr (std::is_same_v<T, float>) {
    put_le_bits(os, std::bit_cast<std::uint32_t>(value));
  } else {
    static_assert(std::is_unsigned_v<T>);
    put_le_bits(os, value);
  }
}

template <typename T>
T read_le(std::istream& is) {
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(get_le_bits<std::uint64_t>(is));
  } else if constexpr (std::is_same_v<T, float>) {
    return std::bit_cast<float>(get_le_bits<std::uint32_t>(is));
  } else {
    static_assert(std::is_unsigned_v<T>);
    return get_le_bits<T>(is);
  }
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0) throw FormatError(what + ": bad magic");
}

}  // namespace okd::detail
