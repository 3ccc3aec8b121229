#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "junglekit/core/unicode.hpp"

namespace junglekit {

using TimeMs = std::int64_t;

/// Case-folds, collapses whitespace runs to one U+0020 and trims both ends.
/// Idempotent. Malformed UTF-8 bytes come out as U+FFFD.
inline std::string normalize_text(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(text);
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (unicode::is_white_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    unicode::append_utf8(out, unicode::simple_fold(cp));
  }
  return out;
}

/// Approximate token count: one token per four UTF-8 bytes, rounded up.
inline constexpr std::uint64_t count_tokens(std::string_view text) noexcept {
  return (static_cast<std::uint64_t>(text.size()) + 3) / 4;
}

}  // namespace junglekit
