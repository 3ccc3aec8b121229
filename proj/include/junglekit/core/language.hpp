#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "junglekit/core/text.hpp"
#include "junglekit/core/unicode.hpp"

namespace junglekit {

/// Language groups with a dedicated small model. `other` routes to the
/// registry's default model.
enum class LanguageTag { en, fr, hi, th, zh, ta, other };

inline constexpr std::array<LanguageTag, 7> kAllLanguages = {
    LanguageTag::en, LanguageTag::fr, LanguageTag::hi, LanguageTag::th,
    LanguageTag::zh, LanguageTag::ta, LanguageTag::other};

inline constexpr std::string_view to_string(LanguageTag tag) noexcept {
  switch (tag) {
    case LanguageTag::en: return "en";
    case LanguageTag::fr: return "fr";
    case LanguageTag::hi: return "hi";
    case LanguageTag::th: return "th";
    case LanguageTag::zh: return "zh";
    case LanguageTag::ta: return "ta";
    case LanguageTag::other: return "other";
  }
  return "other";
}

inline std::optional<LanguageTag> parse_language(std::string_view code) noexcept {
  for (LanguageTag tag : kAllLanguages) {
    if (to_string(tag) == code) return tag;
  }
  return std::nullopt;
}

namespace detail {

// Kept disjoint so a token never counts for both languages.
inline constexpr std::array<std::string_view, 48> kEnglishStopwords = {
    "the",  "a",     "an",    "and",  "or",   "of",    "to",    "in",
    "is",   "are",   "was",   "were", "for",  "on",    "with",  "at",
    "by",   "from",  "this",  "that", "it",   "as",    "be",    "have",
    "has",  "my",    "your",  "what", "how",  "why",   "when",  "where",
    "which", "who",  "do",    "does", "can",  "not",   "i",     "you",
    "we",   "they",  "our",   "their", "will", "should", "there", "than"};

inline constexpr std::array<std::string_view, 48> kFrenchStopwords = {
    "le",    "la",    "les",  "de",    "des",   "du",    "un",    "une",
    "et",    "ou",    "est",  "sont",  "pour",  "dans",  "sur",   "avec",
    "par",   "que",   "qui",  "ce",    "cette", "ces",   "mon",   "ma",
    "mes",   "votre", "vos",  "je",    "tu",    "il",    "elle",  "nous",
    "vous",  "ils",   "elles", "pas",  "ne",    "au",    "aux",   "en",
    "quel",  "quelle", "quels", "leur", "leurs", "mais",  "se", "notre"};

struct ScriptBlock {
  LanguageTag tag;
  char32_t first;
  char32_t last;
};

// Script blocks checked against the share threshold.
inline constexpr std::array<ScriptBlock, 6> kScriptBlocks = {{
    {LanguageTag::hi, 0x0900, 0x097F},   // Devanagari
    {LanguageTag::ta, 0x0B80, 0x0BFF},   // Tamil
    {LanguageTag::th, 0x0E00, 0x0E7F},   // Thai
    {LanguageTag::zh, 0x3400, 0x4DBF},   // CJK Unified Ideographs Extension A
    {LanguageTag::zh, 0x4E00, 0x9FFF},   // CJK Unified Ideographs
    {LanguageTag::zh, 0x20000, 0x2A6DF}, // CJK Unified Ideographs Extension B
}};

}  // namespace detail

inline constexpr double kScriptShareThreshold = 0.30;

inline constexpr const auto& english_stopwords() noexcept { return detail::kEnglishStopwords; }
inline constexpr const auto& french_stopwords() noexcept { return detail::kFrenchStopwords; }

/// Script share first, then en/fr stopword counts; ties and empty text fall
/// back to English. Never returns `other`.
inline LanguageTag detect_language(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(text);
  std::size_t alphabetic = 0;
  // Indexed hi, ta, th, zh, i.e. lexicographic code order.
  std::array<std::size_t, 4> script_counts{};
  auto slot = [](LanguageTag tag) -> std::size_t {
    switch (tag) {
      case LanguageTag::hi: return 0;
      case LanguageTag::ta: return 1;
      case LanguageTag::th: return 2;
      default: return 3;
    }
  };
  constexpr std::array<LanguageTag, 4> kSlotTags = {LanguageTag::hi, LanguageTag::ta,
                                                    LanguageTag::th, LanguageTag::zh};
  for (char32_t cp : cps) {
    if (!unicode::is_alphabetic(cp)) continue;
    ++alphabetic;
    for (const auto& block : detail::kScriptBlocks) {
      if (cp >= block.first && cp <= block.last) {
        ++script_counts[slot(block.tag)];
        break;
      }
    }
  }
  if (alphabetic > 0) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < script_counts.size(); ++i) {
      const double share = static_cast<double>(script_counts[i]) / static_cast<double>(alphabetic);
      if (share < kScriptShareThreshold) continue;
      // Strict comparison keeps the lexicographically smaller code on ties.
      if (!best || script_counts[i] > script_counts[*best]) best = i;
    }
    if (best) return kSlotTags[*best];
  }

  const std::string folded = normalize_text(text);
  std::size_t en_hits = 0;
  std::size_t fr_hits = 0;
  std::size_t pos = 0;
  while (pos < folded.size()) {
    std::size_t end = folded.find(' ', pos);
    if (end == std::string::npos) end = folded.size();
    const std::string_view token(folded.data() + pos, end - pos);
    if (std::find(detail::kEnglishStopwords.begin(), detail::kEnglishStopwords.end(), token) !=
        detail::kEnglishStopwords.end()) {
      ++en_hits;
    } else if (std::find(detail::kFrenchStopwords.begin(), detail::kFrenchStopwords.end(),
                         token) != detail::kFrenchStopwords.end()) {
      ++fr_hits;
    }
    pos = end + 1;
  }
  return fr_hits > en_hits ? LanguageTag::fr : LanguageTag::en;
}

}  // namespace junglekit
