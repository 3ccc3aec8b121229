#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "junglekit/core/embedding.hpp"
#include "junglekit/core/errors.hpp"
#include "junglekit/core/query_key.hpp"
#include "junglekit/core/text.hpp"

namespace junglekit {

template <typename Payload = std::string>
struct CacheEntry {
  QueryKey key;
  Embedding embedding;
  Payload payload{};
  std::uint64_t version = 0;
  TimeMs inserted_at = 0;
  TimeMs ttl = 0;  // 0 = never expires

  bool expired_at(TimeMs now) const noexcept { return ttl > 0 && inserted_at + ttl <= now; }
};

struct CacheConfig {
  std::size_t capacity = 256;
  double similarity_threshold = 0.85;

  void validate() const {
    if (capacity < 1) throw ConfigError("cache.capacity must be >= 1");
    if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
      throw ConfigError("cache.similarity_threshold must be in [0, 1]");
    }
  }
};

struct PutResult {
  bool stored = false;  // false: replay of a version <= the stored one
  std::vector<QueryKey> evicted;
};

template <typename Payload>
struct CacheHit {
  CacheEntry<Payload> entry;
  double similarity = 0.0;
};

/// For caches that are already guarded by an outer lock.
struct NullMutex {
  void lock() noexcept {}
  void unlock() noexcept {}
};

/// Embedding-matched cache: cosine nearest neighbour over live entries,
/// capacity-bounded LRU, per-entry TTL, version-gated writes.
///
/// Lookups touch LRU order, so every operation takes the lock.
template <typename Payload = std::string, typename Mutex = std::mutex>
class SemanticCache {
 public:
  using Entry = CacheEntry<Payload>;
  using Hit = CacheHit<Payload>;

  explicit SemanticCache(CacheConfig config = {}) : config_(config) { config_.validate(); }

  SemanticCache(const SemanticCache&) = delete;
  SemanticCache& operator=(const SemanticCache&) = delete;

  const CacheConfig& config() const noexcept { return config_; }

  /// Stores `entry` under its key with inserted_at = now and marks it most
  /// recently used. Stale versions are ignored.
  PutResult put(Entry entry, TimeMs now) {
    if (!entry.embedding.well_formed()) {
      throw ContractViolation("cache put: embedding is neither zero nor unit norm");
    }
    if (entry.ttl < 0) throw ContractViolation("cache put: negative ttl");

    std::scoped_lock lock(mu_);
    PutResult result;
    entry.inserted_at = now;
    if (auto it = index_.find(entry.key); it != index_.end()) {
      if (entry.version <= it->second->version) return result;
      *it->second = std::move(entry);
      lru_.splice(lru_.begin(), lru_, it->second);
      result.stored = true;
      return result;
    }
    lru_.push_front(std::move(entry));
    index_.emplace(lru_.front().key, lru_.begin());
    result.stored = true;
    while (lru_.size() > config_.capacity) {
      result.evicted.push_back(lru_.back().key);
      index_.erase(lru_.back().key);
      lru_.pop_back();
    }
    return result;
  }

  /// Best cosine match among unexpired entries, ties to the smaller key. A hit
  /// needs similarity >= threshold and refreshes recency.
  std::optional<Hit> lookup(const Embedding& probe, TimeMs now) {
    if (probe.is_zero()) return std::nullopt;
    std::scoped_lock lock(mu_);
    typename std::list<Entry>::iterator best = lru_.end();
    double best_sim = 0.0;
    for (auto it = lru_.begin(); it != lru_.end(); ++it) {
      if (it->expired_at(now)) continue;
      const double sim = cosine(probe, it->embedding);
      if (best == lru_.end() || sim > best_sim || (sim == best_sim && it->key < best->key)) {
        best = it;
        best_sim = sim;
      }
    }
    if (best == lru_.end() || best_sim < config_.similarity_threshold) return std::nullopt;
    lru_.splice(lru_.begin(), lru_, best);
    return Hit{*best, best_sim};
  }

  /// Drops entries with ttl > 0 and inserted_at + ttl <= now.
  std::size_t expire(TimeMs now) {
    std::scoped_lock lock(mu_);
    std::size_t removed = 0;
    for (auto it = lru_.begin(); it != lru_.end();) {
      if (it->expired_at(now)) {
        index_.erase(it->key);
        it = lru_.erase(it);
        ++removed;
      } else {
        ++it;
      }
    }
    return removed;
  }

  /// Exact-key read that leaves recency untouched.
  std::optional<Entry> peek(QueryKey key) const {
    std::scoped_lock lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return *it->second;
  }

  std::size_t size() const {
    std::scoped_lock lock(mu_);
    return lru_.size();
  }

  /// Keys from most to least recently used.
  std::vector<QueryKey> recency_order() const {
    std::scoped_lock lock(mu_);
    std::vector<QueryKey> keys;
    keys.reserve(lru_.size());
    for (const Entry& e : lru_) keys.push_back(e.key);
    return keys;
  }

 private:
  CacheConfig config_;
  mutable Mutex mu_;
  std::list<Entry> lru_;  // front = most recently used
  std::unordered_map<QueryKey, typename std::list<Entry>::iterator> index_;
};

}  // namespace junglekit
