#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "junglekit/core/errors.hpp"
#include "junglekit/core/fnv.hpp"
#include "junglekit/core/text.hpp"
#include "junglekit/core/unicode.hpp"

namespace junglekit {

inline constexpr std::size_t kEmbeddingDims = 256;
inline constexpr double kUnitNormTolerance = 1e-9;

/// Fixed-width text vector. Always either all zeros or L2 unit length.
class Embedding {
 public:
  using Components = std::array<double, kEmbeddingDims>;

  Embedding() = default;

  /// Scales raw counts to unit length; an all-zero input stays zero.
  static Embedding normalized(const Components& raw) {
    double sq = 0.0;
    for (double v : raw) sq += v * v;
    Embedding e;
    if (sq == 0.0) return e;
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t i = 0; i < kEmbeddingDims; ++i) e.dims_[i] = raw[i] * inv;
    return e;
  }

  /// Adopts components that are already unit length or zero (e.g. decoded off
  /// the wire). Anything else is a contract violation.
  static Embedding from_unit(const Components& dims) {
    Embedding e;
    e.dims_ = dims;
    if (!e.well_formed()) {
      throw ContractViolation("embedding is neither zero nor unit norm");
    }
    return e;
  }

  const Components& dims() const noexcept { return dims_; }

  double norm() const noexcept {
    double sq = 0.0;
    for (double v : dims_) sq += v * v;
    return std::sqrt(sq);
  }

  bool is_zero() const noexcept {
    for (double v : dims_) {
      if (v != 0.0) return false;
    }
    return true;
  }

  bool well_formed() const noexcept {
    for (double v : dims_) {
      if (!std::isfinite(v)) return false;
    }
    return is_zero() || std::abs(norm() - 1.0) <= kUnitNormTolerance;
  }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  Components dims_{};
};

/// Cosine similarity; zero whenever either side is the zero vector.
inline double cosine(const Embedding& a, const Embedding& b) noexcept {
  if (a.is_zero() || b.is_zero()) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDims; ++i) dot += a.dims()[i] * b.dims()[i];
  return std::clamp(dot / (a.norm() * b.norm()), -1.0, 1.0);  // rounding can overshoot
}

/// Character-trigram feature hashing over the normalized text. Each code point
/// trigram bumps bucket FNV-1a(utf8(trigram)) mod 256. Fewer than three code
/// points gives the zero vector.
inline Embedding embed(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(normalize_text(text));
  Embedding::Components counts{};
  if (cps.size() < 3) return Embedding{};
  std::string gram;
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
    gram.clear();
    unicode::append_utf8(gram, cps[i]);
    unicode::append_utf8(gram, cps[i + 1]);
    unicode::append_utf8(gram, cps[i + 2]);
    counts[fnv1a64(gram) % kEmbeddingDims] += 1.0;
  }
  return Embedding::normalized(counts);
}

}  // namespace junglekit
