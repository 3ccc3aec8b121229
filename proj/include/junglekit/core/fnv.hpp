#pragma once

#include <cstdint>
#include <string_view>

namespace junglekit {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// FNV-1a, 64-bit.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t hash = kFnvOffsetBasis) noexcept {
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= kFnvPrime;
  }
  return hash;
}

}  // namespace junglekit
