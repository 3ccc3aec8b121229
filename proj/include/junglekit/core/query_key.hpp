#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "junglekit/core/fnv.hpp"
#include "junglekit/core/text.hpp"

namespace junglekit {

/// Stable 64-bit identity of a query: FNV-1a of its normalized UTF-8 text.
struct QueryKey {
  std::uint64_t value = 0;

  friend auto operator<=>(const QueryKey&, const QueryKey&) = default;

  /// 16 lowercase hex digits, zero padded.
  std::string to_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf, 16);
  }

  static std::optional<QueryKey> from_hex(std::string_view hex) {
    if (hex.size() != 16) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : hex) {
      v <<= 4;
      if (c >= '0' && c <= '9') {
        v |= static_cast<std::uint64_t>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        v |= static_cast<std::uint64_t>(c - 'a' + 10);
      } else {
        return std::nullopt;
      }
    }
    return QueryKey{v};
  }
};

inline QueryKey query_key(std::string_view text) {
  return QueryKey{fnv1a64(normalize_text(text))};
}

}  // namespace junglekit

template <>
struct std::hash<junglekit::QueryKey> {
  std::size_t operator()(const junglekit::QueryKey& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.value);
  }
};
