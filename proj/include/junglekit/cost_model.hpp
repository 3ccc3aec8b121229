#pragma once

// Token accounting and the compound-vs-monolithic cost comparison.
//
// Prices are held as integer micro-money per million tokens, so
// tokens * price is an exact cost in pico-money (1e-12). Totals stay exact
// until they are rounded (half to even) to micro-money for reporting.

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "junglekit/core/errors.hpp"
#include "junglekit/core/text.hpp"

namespace junglekit {

using Int128 = __int128;

inline constexpr std::int64_t kMicroPerUnit = 1'000'000;
inline constexpr std::int64_t kPicoPerMicro = 1'000'000;

namespace detail {

/// Round-half-even integer division for a non-negative numerator.
inline Int128 div_round_half_even(Int128 num, Int128 den) {
  Int128 q = num / den;
  const Int128 r = num % den;
  if (r * 2 > den || (r * 2 == den && (q % 2) != 0)) ++q;
  return q;
}

inline std::int64_t units_to_micro(double units) {
  if (!std::isfinite(units)) throw ConfigError("money amount is not finite");
  return static_cast<std::int64_t>(std::llround(units * static_cast<double>(kMicroPerUnit)));
}

inline std::string micro_to_string(std::int64_t micro) {
  const bool neg = micro < 0;
  const std::uint64_t mag = neg ? static_cast<std::uint64_t>(-micro) : static_cast<std::uint64_t>(micro);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%06llu", neg ? "-" : "",
                static_cast<unsigned long long>(mag / kMicroPerUnit),
                static_cast<unsigned long long>(mag % kMicroPerUnit));
  return buf;
}

}  // namespace detail

/// An exact non-negative amount of money in pico-units.
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money from_pico(Int128 pico) { return Money(pico); }
  static constexpr Money from_micro(std::int64_t micro) { return Money(Int128{micro} * kPicoPerMicro); }
  static Money from_units(double units) { return from_micro(detail::units_to_micro(units)); }

  constexpr Int128 pico() const noexcept { return pico_; }

  /// Rounded half to even; the only lossy step.
  std::int64_t micro_units() const {
    const bool neg = pico_ < 0;
    const Int128 mag = neg ? -pico_ : pico_;
    const auto rounded = static_cast<std::int64_t>(detail::div_round_half_even(mag, kPicoPerMicro));
    return neg ? -rounded : rounded;
  }

  double to_double() const { return static_cast<double>(static_cast<long double>(pico_) / 1e12L); }

  /// Fixed six decimals, e.g. "0.300000".
  std::string to_string() const { return detail::micro_to_string(micro_units()); }

  Money rounded_to_micro() const { return from_micro(micro_units()); }

  constexpr Money& operator+=(Money other) noexcept {
    pico_ += other.pico_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) noexcept { return a += b; }
  friend constexpr bool operator==(Money, Money) = default;
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(Int128 pico) : pico_(pico) {}
  Int128 pico_ = 0;
};

/// Money per one million tokens, in micro-units.
struct Price {
  std::int64_t micro_per_million = 0;

  static Price from_units(double per_million) {
    const auto micro = detail::units_to_micro(per_million);
    if (micro < 0) throw ConfigError("prices must be non-negative");
    return Price{micro};
  }
  double units() const { return static_cast<double>(micro_per_million) / kMicroPerUnit; }

  friend bool operator==(const Price&, const Price&) = default;
};

struct ModelPrice {
  Price in;
  Price out;

  friend bool operator==(const ModelPrice&, const ModelPrice&) = default;
};

inline constexpr std::string_view kRerankerModelId = "reranker";

struct CostRecord {
  std::string model_id;
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  TimeMs occurred_at = 0;

  friend bool operator==(const CostRecord&, const CostRecord&) = default;
};

class PricingTable {
 public:
  /// 100 money / 2.2M tokens, to micro precision.
  static constexpr Price kDefaultMonolithicBlended{45'454'545};
  static constexpr Price kDefaultReranker{50'000};
  static constexpr Price kDefaultSmallModel{300'000};

  PricingTable() = default;

  void set(std::string model_id, ModelPrice price) { prices_[std::move(model_id)] = price; }
  void set_monolithic_blended(Price p) { monolithic_blended_ = p; }

  Price monolithic_blended() const noexcept { return monolithic_blended_; }
  const std::map<std::string, ModelPrice, std::less<>>& models() const noexcept { return prices_; }

  /// The reranker falls back to its default rate when not listed.
  ModelPrice price_of(std::string_view model_id) const {
    if (auto it = prices_.find(model_id); it != prices_.end()) return it->second;
    if (model_id == kRerankerModelId) return ModelPrice{kDefaultReranker, kDefaultReranker};
    throw PricingError("no price for model '" + std::string(model_id) + "'");
  }

  /// Every price multiplied by an integer factor.
  PricingTable scaled(std::int64_t factor) const {
    PricingTable t;
    for (const auto& [id, p] : prices_) {
      t.set(id, ModelPrice{Price{p.in.micro_per_million * factor}, Price{p.out.micro_per_million * factor}});
    }
    if (!prices_.contains(kRerankerModelId)) {
      const Price r{kDefaultReranker.micro_per_million * factor};
      t.set(std::string(kRerankerModelId), ModelPrice{r, r});
    }
    t.set_monolithic_blended(Price{monolithic_blended_.micro_per_million * factor});
    return t;
  }

  friend bool operator==(const PricingTable&, const PricingTable&) = default;

 private:
  std::map<std::string, ModelPrice, std::less<>> prices_;
  Price monolithic_blended_ = kDefaultMonolithicBlended;
};

/// Append-only sequence of cost records.
class Ledger {
 public:
  void append(CostRecord record) { records_.push_back(std::move(record)); }
  void append(std::span<const CostRecord> records) {
    records_.insert(records_.end(), records.begin(), records.end());
  }
  std::span<const CostRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

 private:
  std::vector<CostRecord> records_;
};

inline Money record_cost(const CostRecord& r, const PricingTable& pricing) {
  const ModelPrice p = pricing.price_of(r.model_id);
  return Money::from_pico(Int128{r.input_tokens} * p.in.micro_per_million +
                          Int128{r.output_tokens} * p.out.micro_per_million);
}

inline Money total_cost(std::span<const CostRecord> records, const PricingTable& pricing) {
  Money total;
  for (const CostRecord& r : records) total += record_cost(r, pricing);
  return total;
}

inline Money total_cost(const Ledger& ledger, const PricingTable& pricing) {
  return total_cost(ledger.records(), pricing);
}

/// floor(budget / blended * 1M).
inline std::uint64_t tokens_for_budget(Money budget, Price blended) {
  if (blended.micro_per_million <= 0) throw ContractViolation("blended price must be positive");
  if (budget.pico() <= 0) return 0;
  return static_cast<std::uint64_t>(budget.pico() / blended.micro_per_million);
}

/// User-visible token volume: per answered query, its input tokens plus the
/// winning answer's output tokens.
struct ServedVolume {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;

  std::uint64_t total() const noexcept { return input_tokens + output_tokens; }
  ServedVolume& operator+=(const ServedVolume& o) noexcept {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  friend bool operator==(const ServedVolume&, const ServedVolume&) = default;
};

/// What serving `volume` through one monolithic model would cost.
inline Money monolithic_cost(const ServedVolume& volume, const PricingTable& pricing) {
  return Money::from_pico(Int128{volume.total()} * pricing.monolithic_blended().micro_per_million);
}

inline double cost_ratio(std::span<const CostRecord> compound, const ServedVolume& volume,
                         const PricingTable& pricing) {
  if (compound.empty()) throw ContractViolation("cost_ratio: compound ledger is empty");
  const Money num = total_cost(compound, pricing);
  const Money den = monolithic_cost(volume, pricing);
  if (den.pico() == 0) throw ContractViolation("cost_ratio: zero monolithic denominator");
  return static_cast<double>(static_cast<long double>(num.pico()) / static_cast<long double>(den.pico()));
}

inline double cost_ratio(const Ledger& compound, const ServedVolume& volume,
                         const PricingTable& pricing) {
  return cost_ratio(compound.records(), volume, pricing);
}

}  // namespace junglekit
