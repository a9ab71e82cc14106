#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace krw {

// 64-bit FNV-1a; stable across platforms, used for cache fingerprints.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace krw
