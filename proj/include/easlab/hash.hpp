#pragma once

#include <cstdint>
#include <string_view>

namespace easlab {

// 64-bit FNV-1a; stable across platforms, used to derive per-item seeds.
constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace easlab
