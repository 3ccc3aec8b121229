#pragma once

// The caching node on the read path. Serves queries from per-user snapshot
// stores, queues misses for the backend and applies pushed snapshots. It never
// calls a model.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "junglekit/core.hpp"
#include "junglekit/edge_types.hpp"
#include "junglekit/llm_ensemble.hpp"
#include "junglekit/semantic_cache.hpp"
#include "junglekit/snapshot_log.hpp"

namespace junglekit {

struct EdgeNodeConfig {
  CacheConfig cache;
  TimeMs lease_ms = 300'000;

  void validate() const {
    cache.validate();
    if (lease_ms <= 0) throw ConfigError("lease_ms must be positive");
  }
};

struct EdgeStats {
  std::uint64_t queries = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses_enqueued = 0;      // distinct MissRecords created
  std::uint64_t misses_deduplicated = 0;  // misses folded into a pending record
  std::uint64_t misses_cleared = 0;
  std::uint64_t applied = 0;
  std::uint64_t stale_ignored = 0;
  std::uint64_t pii_rejections = 0;
  std::uint64_t serve_path_llm_calls = 0;
};

namespace detail {

using UserKey = std::pair<std::string, QueryKey>;

/// FIFO of pending misses, at most one per (user, key). Drained records are
/// leased; an expired lease puts the record back at its original position.
class MissQueue {
 public:
  /// False when a record for the same (user, key) is already pending.
  bool enqueue(MissRecord record) {
    UserKey k{record.user_id, record.key};
    if (pending_.contains(k)) return false;
    const std::uint64_t seq = next_seq_++;
    pending_.emplace(std::move(k), Pending{seq, false, 0});
    ready_.emplace(seq, std::move(record));
    return true;
  }

  std::vector<MissRecord> drain(std::size_t max, TimeMs now, TimeMs lease_ms) {
    for (auto it = inflight_.begin(); it != inflight_.end();) {
      Pending& p = pending_.at({it->second.user_id, it->second.key});
      if (p.lease_deadline <= now) {
        p.inflight = false;
        ready_.emplace(p.seq, std::move(it->second));
        it = inflight_.erase(it);
      } else {
        ++it;
      }
    }
    std::vector<MissRecord> out;
    while (out.size() < max && !ready_.empty()) {
      auto node = ready_.extract(ready_.begin());
      Pending& p = pending_.at({node.mapped().user_id, node.mapped().key});
      p.inflight = true;
      p.lease_deadline = now + lease_ms;
      out.push_back(node.mapped());
      inflight_.insert(std::move(node));
    }
    return out;
  }

  bool clear(const std::string& user_id, QueryKey key) {
    auto it = pending_.find({user_id, key});
    if (it == pending_.end()) return false;
    (it->second.inflight ? inflight_ : ready_).erase(it->second.seq);
    pending_.erase(it);
    return true;
  }

  bool contains(const std::string& user_id, QueryKey key) const {
    return pending_.contains({user_id, key});
  }
  std::size_t ready() const noexcept { return ready_.size(); }
  std::size_t inflight() const noexcept { return inflight_.size(); }

 private:
  struct Pending {
    std::uint64_t seq;
    bool inflight;
    TimeMs lease_deadline;
  };
  std::uint64_t next_seq_ = 0;
  std::map<UserKey, Pending> pending_;
  std::map<std::uint64_t, MissRecord> ready_;
  std::map<std::uint64_t, MissRecord> inflight_;
};

}  // namespace detail

class EdgeNode {
 public:
  explicit EdgeNode(EdgeNodeConfig config = {}) : config_(std::move(config)) { config_.validate(); }

  EdgeNode(const EdgeNode&) = delete;
  EdgeNode& operator=(const EdgeNode&) = delete;

  const EdgeNodeConfig& config() const noexcept { return config_; }

  /// Replays the log at `path` into this node, then appends every applied
  /// snapshot to it. Returns the number of replayed records that applied.
  std::size_t attach_log(const std::filesystem::path& path) {
    auto log = std::make_unique<SnapshotLog>(path);
    std::size_t applied = 0;
    for (const Snapshot& s : log->replayed()) {
      if (apply_locked(s, s.generated_at, nullptr) == ApplyResult::applied) ++applied;
    }
    std::scoped_lock lock(log_mu_);
    log_ = std::move(log);
    return applied;
  }

  /// Read path. Hits return the best semantic match in the user's store;
  /// misses are queued (deduplicated) for the backend. Throws PiiRejected if
  /// the query text still carries identifiers.
  QueryResponse serve_query(const QueryRequest& req, TimeMs now) {
    const std::uint64_t llm_calls_before = instrumentation::llm_calls;
    struct ProbeGuard {
      EdgeNode& node;
      std::uint64_t before;
      ~ProbeGuard() { node.serve_path_llm_calls_ += instrumentation::llm_calls - before; }
    } guard{*this, llm_calls_before};

    if (req.user_id.empty()) throw ContractViolation("serve_query: empty user_id");
    ++queries_;
    if (!detect_pii(req.query_text).empty()) {
      ++pii_rejections_;
      throw PiiRejected("query text contains personal identifiers");
    }

    const Embedding probe = embed(req.query_text);
    std::optional<CacheHit<Snapshot>> hit;
    if (UserStore* store = find_store(req.user_id)) {
      std::scoped_lock lock(store->mu);
      hit = store->cache.lookup(probe, now);
    }

    QueryResponse resp;
    if (hit) {
      ++hits_;
      resp.status = QueryStatus::hit;
      resp.age_ms = std::max<TimeMs>(0, now - hit->entry.payload.generated_at);
      resp.similarity = hit->similarity;
      resp.snapshot = std::move(hit->entry.payload);
      return resp;
    }

    MissRecord miss{req.user_id, query_key(req.query_text), req.query_text, req.language_hint, now};
    {
      std::scoped_lock lock(miss_mu_);
      if (misses_.enqueue(std::move(miss))) {
        ++misses_enqueued_;
      } else {
        ++misses_deduplicated_;
      }
    }
    resp.status = QueryStatus::miss_enqueued;
    return resp;
  }

  /// Version-gated write. Applied only when newer than anything seen for the
  /// (user, key); either way a pending miss for the key is cleared.
  ApplyResult apply_update(const Snapshot& s, TimeMs now) {
    std::unique_lock log_lock(log_mu_, std::defer_lock);
    if (log_) log_lock.lock();
    return apply_locked(s, now, log_.get());
  }

  /// Up to `max` pending misses in FIFO order, leased for lease_ms.
  std::vector<MissRecord> drain_misses(std::size_t max, TimeMs now) {
    if (max < 1) throw ContractViolation("drain_misses: max must be >= 1");
    std::scoped_lock lock(miss_mu_);
    return misses_.drain(max, now, config_.lease_ms);
  }

  std::optional<Snapshot> snapshot(const std::string& user_id, QueryKey key) const {
    UserStore* store = find_store(user_id);
    if (!store) return std::nullopt;
    std::scoped_lock lock(store->mu);
    auto e = store->cache.peek(key);
    if (!e) return std::nullopt;
    return e->payload;
  }

  /// Highest version ever applied for (user, key); survives LRU eviction.
  std::uint64_t version_of(const std::string& user_id, QueryKey key) const {
    UserStore* store = find_store(user_id);
    if (!store) return 0;
    std::scoped_lock lock(store->mu);
    auto it = store->high_water.find(key);
    return it == store->high_water.end() ? 0 : it->second;
  }

  bool miss_pending(const std::string& user_id, QueryKey key) const {
    std::scoped_lock lock(miss_mu_);
    return misses_.contains(user_id, key);
  }

  std::size_t ready_misses() const {
    std::scoped_lock lock(miss_mu_);
    return misses_.ready();
  }

  std::size_t inflight_misses() const {
    std::scoped_lock lock(miss_mu_);
    return misses_.inflight();
  }

  EdgeStats stats() const {
    EdgeStats s;
    s.queries = queries_;
    s.hits = hits_;
    s.misses_enqueued = misses_enqueued_;
    s.misses_deduplicated = misses_deduplicated_;
    s.misses_cleared = misses_cleared_;
    s.applied = applied_;
    s.stale_ignored = stale_ignored_;
    s.pii_rejections = pii_rejections_;
    s.serve_path_llm_calls = serve_path_llm_calls_;
    return s;
  }

 private:
  struct UserStore {
    explicit UserStore(const CacheConfig& c) : cache(c) {}
    mutable std::mutex mu;
    SemanticCache<Snapshot, NullMutex> cache;
    std::map<QueryKey, std::uint64_t> high_water;
  };

  UserStore* find_store(const std::string& user_id) const {
    std::shared_lock lock(stores_mu_);
    auto it = stores_.find(user_id);
    return it == stores_.end() ? nullptr : it->second.get();
  }

  UserStore& store_for(const std::string& user_id) {
    if (UserStore* s = find_store(user_id)) return *s;
    std::unique_lock lock(stores_mu_);
    auto [it, inserted] = stores_.try_emplace(user_id, nullptr);
    if (inserted) it->second = std::make_unique<UserStore>(config_.cache);
    return *it->second;
  }

  ApplyResult apply_locked(const Snapshot& s, TimeMs now, SnapshotLog* log) {
    if (s.user_id.empty()) throw ContractViolation("apply_update: empty user_id");
    if (s.version == 0) throw ContractViolation("apply_update: versions start at 1");
    if (!s.embedding.well_formed()) throw ContractViolation("apply_update: malformed embedding");

    UserStore& store = store_for(s.user_id);
    ApplyResult result = ApplyResult::stale_ignored;
    {
      std::scoped_lock lock(store.mu);
      std::uint64_t& high = store.high_water[s.key];
      if (s.version > high) {
        high = s.version;
        store.cache.put(CacheEntry<Snapshot>{s.key, s.embedding, s, s.version, now, 0}, now);
        if (log) log->append(s);
        result = ApplyResult::applied;
      }
    }
    if (result == ApplyResult::applied) {
      ++applied_;
    } else {
      ++stale_ignored_;
    }
    std::scoped_lock lock(miss_mu_);
    if (misses_.clear(s.user_id, s.key)) ++misses_cleared_;
    return result;
  }

  EdgeNodeConfig config_;

  mutable std::shared_mutex stores_mu_;
  std::map<std::string, std::unique_ptr<UserStore>, std::less<>> stores_;

  mutable std::mutex miss_mu_;
  detail::MissQueue misses_;

  std::mutex log_mu_;
  std::unique_ptr<SnapshotLog> log_;

  std::atomic<std::uint64_t> queries_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_enqueued_{0};
  std::atomic<std::uint64_t> misses_deduplicated_{0};
  std::atomic<std::uint64_t> misses_cleared_{0};
  std::atomic<std::uint64_t> applied_{0};
  std::atomic<std::uint64_t> stale_ignored_{0};
  std::atomic<std::uint64_t> pii_rejections_{0};
  std::atomic<std::uint64_t> serve_path_llm_calls_{0};
};

}  // namespace junglekit
