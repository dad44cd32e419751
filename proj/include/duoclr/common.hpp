#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace duoclr {

// Invalid inputs, malformed files, contract violations.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and OS-level failures.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

// --- little-endian scalar encoding (on-disk formats are LE by contract) ---

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t x) {
  out.push_back(static_cast<unsigned char>(x & 0xff));
  out.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u64le(std::vector<unsigned char>& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return x;
}

inline void put_f32le(std::vector<unsigned char>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32le(out, bits);
}

inline float get_f32le(const unsigned char* p) {
  std::uint32_t bits = get_u32le(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

inline void put_f64le(std::vector<unsigned char>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64le(out, bits);
}

inline double get_f64le(const unsigned char* p) {
  std::uint64_t bits = get_u64le(p);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

// FNV-1a, used for content hashes in reports.
inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[x & 0xf];
    x >>= 4;
  }
  return s;
}

}  // namespace duoclr
