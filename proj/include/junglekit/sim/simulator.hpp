#pragma once

// Single-threaded discrete-event run of the whole system on a logical clock.
// Reads travel user -> edge -> user; misses wait for updater ticks; pushes
// travel backend -> edge after any model latency. Times are double
// milliseconds; components see floor(t).

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "junglekit/edge_node.hpp"
#include "junglekit/llm_ensemble.hpp"
#include "junglekit/sim/config.hpp"
#include "junglekit/sim/report.hpp"
#include "junglekit/sim/rng.hpp"
#include "junglekit/sim/workload.hpp"
#include "junglekit/updater.hpp"

namespace junglekit::sim {

/// Upper bound on ticks after the workload ends while waiting for the queues
/// to empty.
inline constexpr std::uint64_t kMaxDrainTicks = 1000;

struct SimResult {
  MetricsReport report;
  Ledger ledger;
  ServedVolume served;
};

/// Throws InvariantViolation listing every failed run check.
inline void check_invariants(const MetricsReport& r) {
  std::string failures;
  auto expect_zero = [&failures](std::uint64_t v, const char* what) {
    if (v != 0) failures += std::string(failures.empty() ? "" : "; ") + what + " = " + std::to_string(v);
  };
  expect_zero(r.checks.serve_path_llm_calls, "serve-path LLM calls");
  expect_zero(r.checks.pii_payload_detections, "PII detections in copilot payloads");
  expect_zero(r.checks.edge_pii_rejections, "edge PII rejections");
  expect_zero(r.checks.staleness_violations, "hits older than the staleness bound");
  expect_zero(r.checks.version_regressions, "repeated or regressing applies");
  expect_zero(r.checks.conservation_violations, "edges violating miss conservation");
  if (!failures.empty()) throw InvariantViolation("invariant violation: " + failures);
}

class Simulator {
 public:
  explicit Simulator(SimConfig config) : config_(std::move(config)) { config_.validate(); }

  SimResult run();

 private:
  class Run;
  SimConfig config_;
};

class Simulator::Run {
 public:
  explicit Run(const SimConfig& config)
      : config_(config),
        workload_(generate_workload(config)),
        llm_(config.registry),
        updater_(config.updater, llm_),
        read_legs_(Rng::stream(config.seed, "read-legs")),
        write_legs_(Rng::stream(config.seed, "write-legs")),
        backend_legs_(Rng::stream(config.seed, "backend-legs")),
        llm_latency_(Rng::stream(config.seed, "llm")),
        faults_(Rng::stream(config.seed, "faults")) {
    for (std::size_t r = 0; r < config.regions.size(); ++r) {
      edges_.push_back(std::make_unique<EdgeNode>(EdgeNodeConfig{config.cache, config.updater.lease_ms}));
      links_.push_back(std::make_unique<Link>(*this, r));
    }
    for (auto& link : links_) updater_.connect(*link);
  }

  SimResult execute() {
    for (std::size_t i = 0; i < workload_.events.size(); ++i) {
      schedule(static_cast<double>(workload_.events[i].at), Kind::workload, i);
    }
    const TimeMs period = config_.updater.update_period_ms;
    if (!workload_.events.empty()) schedule(static_cast<double>(period), Kind::tick, 0);

    while (!queue_.empty()) {
      const Scheduled ev = queue_.top();
      queue_.pop();
      now_ = ev.at;
      ++event_count_;
      switch (ev.kind) {
        case Kind::workload: on_workload(workload_.events[ev.id]); break;
        case Kind::read_at_edge: on_read(ev.id); break;
        case Kind::write_at_backend: updater_.mark_dirty(workload_.users[ev.id].id); break;
        case Kind::tick: on_tick(); break;
        case Kind::delivery: on_delivery(ev.id); break;
      }
    }
    return finish();
  }

 private:
  enum class Kind { workload, read_at_edge, write_at_backend, tick, delivery };

  struct Scheduled {
    double at;
    std::uint64_t seq;
    Kind kind;
    std::size_t id;
    bool operator>(const Scheduled& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  struct PendingRead {
    std::size_t region;
    QueryRequest request;
    double up_ms;
    double down_ms;
  };

  struct Delivery {
    std::size_t region;
    Snapshot snapshot;
  };

  using EdgeKey = std::tuple<std::size_t, std::string, QueryKey>;

  /// Backend's view of one simulated edge: pushes become delivery events.
  class Link final : public EdgeLink {
   public:
    Link(Run& run, std::size_t region) : run_(run), region_(region), name_(run.config_.regions[region].name) {}

    const std::string& name() const override { return name_; }

    std::vector<MissRecord> drain(std::size_t max, TimeMs now) override {
      return run_.edges_[region_]->drain_misses(max, now);
    }

    PushStatus push(const Snapshot& s, const PushContext& ctx) override {
      return run_.on_push(region_, s, ctx);
    }

   private:
    Run& run_;
    std::size_t region_;
    std::string name_;
  };

  static TimeMs floor_ms(double t) { return static_cast<TimeMs>(std::floor(t)); }

  void schedule(double at, Kind kind, std::size_t id) { queue_.push(Scheduled{at, seq_++, kind, id}); }

  double leg(Rng& rng, const LegLatency& l) { return rng.lognormal(l.median_ms, l.sigma); }

  void on_workload(const WorkloadEvent& e) {
    const User& user = workload_.users[e.user];
    const Region& region = config_.regions[user.region];
    switch (e.kind) {
      case EventKind::session_start: ++counts_.sessions; return;
      case EventKind::write:
        ++counts_.writes;
        schedule(now_ + leg(write_legs_, region.user_backend_latency), Kind::write_at_backend, e.user);
        return;
      case EventKind::query: break;
    }
    ++counts_.reads;
    // Copilot side: identifiers are replaced before anything leaves the
    // browser; the interceptor re-checks every outbound payload.
    const Redaction redacted = redact(e.text, detect_pii(e.text));
    if (!detect_pii(redacted.text).empty()) ++checks_.pii_payload_detections;
    const double up = leg(read_legs_, region.user_edge_latency);
    const double down = leg(read_legs_, region.user_edge_latency);
    const std::size_t id = next_id_++;
    reads_.emplace(id, PendingRead{user.region, QueryRequest{user.id, e.session_id, redacted.text, std::nullopt},
                                   up, down});
    schedule(now_ + up, Kind::read_at_edge, id);
  }

  void on_read(std::size_t id) {
    auto node = reads_.extract(id);
    const PendingRead& r = node.mapped();
    latencies_.push_back(r.up_ms + config_.edge_processing_ms + r.down_ms);
    try {
      const QueryResponse resp = edges_[r.region]->serve_query(r.request, floor_ms(now_));
      if (resp.status == QueryStatus::hit) {
        ++counts_.hits;
        ages_.push_back(resp.age_ms.value_or(0));
      }
    } catch (const PiiRejected&) {
      ++checks_.edge_pii_rejections;
    }
  }

  void on_tick() {
    const auto tick_at = floor_ms(now_);
    ++counts_.ticks;
    updater_.set_refresh_enabled(tick_at < config_.duration_ms);
    updater_.tick(tick_at);

    const double next = now_ + static_cast<double>(config_.updater.update_period_ms);
    const bool in_workload = next < static_cast<double>(config_.duration_ms);
    if (in_workload || (work_remaining() && drain_ticks_++ < kMaxDrainTicks)) schedule(next, Kind::tick, 0);
  }

  bool work_remaining() const {
    if (updater_.outbox_size() > 0 || !queue_.empty()) return true;
    for (const auto& e : edges_) {
      if (e->ready_misses() + e->inflight_misses() > 0) return true;
    }
    return false;
  }

  PushStatus on_push(std::size_t region, const Snapshot& s, const PushContext& ctx) {
    ++counts_.pushes;
    // First sight of a version starts (or extends) the edge's lag for the key.
    auto& produced = produced_[EdgeKey{region, s.user_id, s.key}];
    produced.try_emplace(s.version, s.generated_at);

    if (faults_.chance(config_.push_failure_rate)) {
      ++counts_.push_failures;
      return PushStatus::failed;
    }
    double delay = leg(backend_legs_, config_.regions[region].edge_backend_latency);
    if (ctx.inferred) {
      double slowest = 0.0;
      for (const std::string& id : ctx.model_ids) {
        const ModelSpec* m = config_.registry.find(id);
        if (!m) continue;
        const double t = llm_latency_.lognormal(m->sim_latency_ms.median_ms, m->sim_latency_ms.sigma) *
                         config_.llm_latency_scale;
        slowest = std::max(slowest, t);
      }
      delay += slowest;
    }
    const std::size_t id = next_id_++;
    deliveries_.emplace(id, Delivery{region, s});
    schedule(now_ + delay, Kind::delivery, id);
    return PushStatus::sent;
  }

  void on_delivery(std::size_t id) {
    auto node = deliveries_.extract(id);
    const Delivery& d = node.mapped();
    const ApplyResult result = edges_[d.region]->apply_update(d.snapshot, floor_ms(now_));
    if (result == ApplyResult::stale_ignored) {
      ++counts_.stale_ignored;
      return;
    }
    ++counts_.applied;
    const EdgeKey key{d.region, d.snapshot.user_id, d.snapshot.key};
    std::uint64_t& last = last_applied_[key];
    if (d.snapshot.version <= last) ++checks_.version_regressions;
    last = std::max(last, d.snapshot.version);

    // Lag closes for every produced version up to this one; it started at the
    // oldest of them.
    auto& produced = produced_[key];
    const auto end = produced.upper_bound(d.snapshot.version);
    if (produced.begin() != end) {
      const double lag = now_ - static_cast<double>(produced.begin()->second);
      checks_.max_propagation_delay_ms = std::max(checks_.max_propagation_delay_ms, lag);
      produced.erase(produced.begin(), end);
    }
  }

  SimResult finish() {
    SimResult out;
    MetricsReport& r = out.report;
    r.seed = config_.seed;
    r.event_count = event_count_;

    std::sort(latencies_.begin(), latencies_.end());
    r.read_latency = {nearest_rank(latencies_, 50), nearest_rank(latencies_, 95), nearest_rank(latencies_, 99)};
    std::sort(ages_.begin(), ages_.end());
    r.staleness = {ages_.empty() ? 0 : ages_.back(), nearest_rank(ages_, 99)};

    for (const auto& edge : edges_) {
      const EdgeStats s = edge->stats();
      const std::uint64_t pending = edge->ready_misses() + edge->inflight_misses();
      r.pending_misses_final += pending;
      counts_.misses_enqueued += s.misses_enqueued;
      counts_.misses_deduplicated += s.misses_deduplicated;
      counts_.misses_answered += s.misses_cleared;
      checks_.serve_path_llm_calls += s.serve_path_llm_calls;
      if (s.misses_enqueued != s.misses_cleared + pending) ++checks_.conservation_violations;
    }
    counts_.inferences = updater_.answered_count();
    r.hit_rate = counts_.reads == 0 ? 0.0 : static_cast<double>(counts_.hits) / static_cast<double>(counts_.reads);

    checks_.staleness_bound_ms =
        static_cast<double>(config_.updater.update_period_ms) + checks_.max_propagation_delay_ms;
    for (TimeMs age : ages_) {
      if (static_cast<double>(age) > checks_.staleness_bound_ms) ++checks_.staleness_violations;
    }

    out.ledger = updater_.ledger();
    out.served = updater_.served();
    const Money compound = total_cost(out.ledger, config_.pricing);
    const Money monolithic = monolithic_cost(out.served, config_.pricing);
    r.compound_cost = compound.rounded_to_micro();
    r.monolithic_cost = monolithic.rounded_to_micro();
    r.cost_ratio = out.ledger.empty() || monolithic.pico() == 0
                       ? 0.0
                       : cost_ratio(out.ledger, out.served, config_.pricing);
    for (const CostRecord& rec : out.ledger.records()) {
      TokenCounts& t = r.tokens_by_model[rec.model_id];
      t.input_tokens += rec.input_tokens;
      t.output_tokens += rec.output_tokens;
    }
    r.served_tokens = {out.served.input_tokens, out.served.output_tokens};
    r.counts = counts_;
    r.checks = checks_;
    return out;
  }

  const SimConfig& config_;
  Workload workload_;
  LlmNode llm_;
  Updater updater_;
  std::vector<std::unique_ptr<EdgeNode>> edges_;
  std::vector<std::unique_ptr<Link>> links_;

  Rng read_legs_;
  Rng write_legs_;
  Rng backend_legs_;
  Rng llm_latency_;
  Rng faults_;

  std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  std::uint64_t event_count_ = 0;
  std::uint64_t drain_ticks_ = 0;
  std::size_t next_id_ = 0;

  std::unordered_map<std::size_t, PendingRead> reads_;
  std::unordered_map<std::size_t, Delivery> deliveries_;
  std::map<EdgeKey, std::map<std::uint64_t, TimeMs>> produced_;
  std::map<EdgeKey, std::uint64_t> last_applied_;

  std::vector<double> latencies_;
  std::vector<TimeMs> ages_;
  RunCounts counts_;
  RunChecks checks_;
};

inline SimResult Simulator::run() { return Run(config_).execute(); }

/// Convenience: run and return the report only.
inline MetricsReport run(const SimConfig& config) { return Simulator(config).run().report; }

}  // namespace junglekit::sim
