#pragma once

// Detection and reversible redaction of personal identifiers (emails, phone
// numbers, payment card numbers). Offsets are UTF-8 byte offsets; all
// patterns are ASCII so multi-byte sequences never match.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "junglekit/core/errors.hpp"

namespace junglekit {

enum class PiiKind { email, phone, card };

inline constexpr std::string_view to_string(PiiKind kind) noexcept {
  switch (kind) {
    case PiiKind::email: return "email";
    case PiiKind::phone: return "phone";
    case PiiKind::card: return "card";
  }
  return "email";
}

struct PIISpan {
  std::size_t start = 0;
  std::size_t end = 0;
  PiiKind kind = PiiKind::email;

  friend bool operator==(const PIISpan&, const PIISpan&) = default;
};

inline bool luhn_valid(std::string_view digits) noexcept {
  if (digits.empty()) return false;
  int sum = 0;
  bool twice = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (*it < '0' || *it > '9') return false;
    int d = *it - '0';
    if (twice) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    twice = !twice;
  }
  return sum % 10 == 0;
}

namespace detail {

inline constexpr std::size_t kMaxLocalPart = 64;
inline constexpr std::size_t kMaxDomain = 253;

inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
inline bool is_alnum(char c) noexcept {
  return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_local_char(char c) noexcept {
  return is_alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}
inline bool is_domain_char(char c) noexcept { return is_alnum(c) || c == '.' || c == '-'; }
inline bool is_phone_separator(char c) noexcept {
  return c == ' ' || c == '-' || c == '.' || c == '(' || c == ')';
}

struct DigitGroup {
  std::size_t start;
  std::size_t end;
};

inline std::vector<DigitGroup> digit_groups(std::string_view text) {
  std::vector<DigitGroup> groups;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    groups.push_back({start, i});
  }
  return groups;
}

inline int priority(PiiKind kind) noexcept {
  switch (kind) {
    case PiiKind::card: return 0;
    case PiiKind::email: return 1;
    case PiiKind::phone: return 2;
  }
  return 3;
}

// Candidates are always aligned to whole digit groups so that redacting an
// accepted span can never expose a new match in the remaining text.
inline void card_candidates(std::string_view text, const std::vector<DigitGroup>& groups,
                            std::vector<PIISpan>& out) {
  std::string digits;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    digits.clear();
    for (std::size_t j = i; j < groups.size(); ++j) {
      if (j > i) {
        const std::size_t gap_start = groups[j - 1].end;
        const char sep = text[gap_start];
        if (groups[j].start != gap_start + 1 || (sep != ' ' && sep != '-')) break;
      }
      digits.append(text.substr(groups[j].start, groups[j].end - groups[j].start));
      if (digits.size() > 19) break;
      if (digits.size() >= 13 && luhn_valid(digits)) {
        out.push_back({groups[i].start, groups[j].end, PiiKind::card});
      }
    }
  }
}

inline void phone_candidates(std::string_view text, const std::vector<DigitGroup>& groups,
                             std::vector<PIISpan>& out) {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::size_t prefixed = groups[i].start;
    if (prefixed > 0 && text[prefixed - 1] == '(') --prefixed;
    if (prefixed > 0 && text[prefixed - 1] == '+') --prefixed;
    std::size_t digits = 0;
    for (std::size_t j = i; j < groups.size(); ++j) {
      if (j > i) {
        const std::size_t gap = groups[j].start - groups[j - 1].end;
        if (gap < 1 || gap > 2) break;
        bool ok = true;
        for (std::size_t p = groups[j - 1].end; p < groups[j].start; ++p) {
          ok = ok && is_phone_separator(text[p]);
        }
        if (!ok) break;
      }
      digits += groups[j].end - groups[j].start;
      if (digits > 15) break;
      if (digits >= 7) {
        out.push_back({groups[i].start, groups[j].end, PiiKind::phone});
        if (prefixed != groups[i].start) {
          out.push_back({prefixed, groups[j].end, PiiKind::phone});
        }
      }
    }
  }
}

// Every (local suffix, valid domain prefix) pair around each '@' is a
// candidate; leftmost-longest selection keeps the widest one that fits.
inline void email_candidates(std::string_view text, std::vector<PIISpan>& out) {
  for (std::size_t at = 0; at < text.size(); ++at) {
    if (text[at] != '@') continue;

    std::size_t local_min = at;
    while (local_min > 0 && is_local_char(text[local_min - 1]) && at - local_min < kMaxLocalPart) {
      --local_min;
    }
    if (local_min == at) continue;

    std::vector<std::size_t> ends;
    bool ok = at + 1 < text.size() && is_alnum(text[at + 1]);
    bool has_dot = false;
    for (std::size_t p = at + 1; ok && p < text.size() && p - at <= kMaxDomain; ++p) {
      const char c = text[p];
      if (!is_domain_char(c)) break;
      if (c == '.') {
        if (!is_alnum(text[p - 1])) break;
        has_dot = true;
      } else if (c == '-' && text[p - 1] == '.') {
        break;
      }
      if (has_dot && is_alnum(c)) ends.push_back(p + 1);
    }
    if (ends.empty()) continue;

    for (std::size_t start = local_min; start < at; ++start) {
      if (text[start] == '.') continue;
      for (std::size_t end : ends) out.push_back({start, end, PiiKind::email});
    }
  }
}

}  // namespace detail

/// Sorted, non-overlapping PII spans. Overlaps resolve by kind priority
/// (card, then email, then phone) and then leftmost-longest.
inline std::vector<PIISpan> detect_pii(std::string_view text) {
  const auto groups = detail::digit_groups(text);
  std::vector<PIISpan> candidates;
  detail::card_candidates(text, groups, candidates);
  detail::email_candidates(text, candidates);
  detail::phone_candidates(text, groups, candidates);

  std::sort(candidates.begin(), candidates.end(), [](const PIISpan& a, const PIISpan& b) {
    const int pa = detail::priority(a.kind);
    const int pb = detail::priority(b.kind);
    if (pa != pb) return pa < pb;
    if (a.start != b.start) return a.start < b.start;
    return (a.end - a.start) > (b.end - b.start);
  });

  std::map<std::size_t, PIISpan> accepted;
  auto overlaps = [&accepted](const PIISpan& c) {
    auto it = accepted.lower_bound(c.start);
    if (it != accepted.end() && it->first < c.end) return true;
    if (it != accepted.begin() && std::prev(it)->second.end > c.start) return true;
    return false;
  };
  for (const PIISpan& c : candidates) {
    if (!overlaps(c)) accepted.emplace(c.start, c);
  }

  std::vector<PIISpan> spans;
  spans.reserve(accepted.size());
  for (const auto& [start, span] : accepted) spans.push_back(span);
  return spans;
}

/// "⟦PII:i⟧" (U+27E6, U+27E7).
inline std::string pii_placeholder(std::size_t index) {
  return "\xE2\x9F\xA6PII:" + std::to_string(index) + "\xE2\x9F\xA7";
}

struct Redaction {
  std::string text;
  std::map<std::size_t, std::string> placeholders;
};

/// Replaces the i-th span with ⟦PII:i⟧. Spans must be sorted, in range and
/// non-overlapping.
inline Redaction redact(std::string_view text, std::span<const PIISpan> spans) {
  std::size_t prev_end = 0;
  for (const PIISpan& s : spans) {
    if (s.start >= s.end || s.end > text.size()) {
      throw ContractViolation("redact: span out of range");
    }
    if (s.start < prev_end) {
      throw ContractViolation("redact: spans overlap or are unsorted");
    }
    prev_end = s.end;
  }

  Redaction out;
  out.text.reserve(text.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    out.text.append(text.substr(cursor, spans[i].start - cursor));
    out.text += pii_placeholder(i);
    out.placeholders.emplace(i, std::string(text.substr(spans[i].start, spans[i].end - spans[i].start)));
    cursor = spans[i].end;
  }
  out.text.append(text.substr(cursor));
  return out;
}

/// Re-inlines originals for every placeholder whose index is in the map.
/// Placeholders without a mapping are left as is.
inline std::string restore(std::string_view redacted,
                           const std::map<std::size_t, std::string>& placeholders) {
  static constexpr std::string_view kOpen = "\xE2\x9F\xA6PII:";
  static constexpr std::string_view kClose = "\xE2\x9F\xA7";
  std::string out;
  out.reserve(redacted.size());
  std::size_t cursor = 0;
  while (true) {
    const std::size_t open = redacted.find(kOpen, cursor);
    if (open == std::string_view::npos) break;
    std::size_t p = open + kOpen.size();
    std::size_t index = 0;
    const std::size_t digits_start = p;
    while (p < redacted.size() && detail::is_digit(redacted[p]) && p - digits_start < 18) {
      index = index * 10 + static_cast<std::size_t>(redacted[p] - '0');
      ++p;
    }
    const bool closed = p > digits_start && redacted.substr(p, kClose.size()) == kClose;
    auto it = closed ? placeholders.find(index) : placeholders.end();
    if (it == placeholders.end()) {
      out.append(redacted.substr(cursor, open + kOpen.size() - cursor));
      cursor = open + kOpen.size();
      continue;
    }
    out.append(redacted.substr(cursor, open - cursor));
    out += it->second;
    cursor = p + kClose.size();
  }
  out.append(redacted.substr(cursor));
  return out;
}

}  // namespace junglekit
