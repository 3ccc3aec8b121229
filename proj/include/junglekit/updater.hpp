#pragma once

// The backend's periodic propagation loop. Each tick, per connected edge:
// retry pushes that failed earlier, drain pending misses and answer them, then
// refresh every snapshot the backend has produced for that edge (re-answer
// for users whose data changed, otherwise revalidate the existing answer).

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "junglekit/cost_model.hpp"
#include "junglekit/edge_node.hpp"
#include "junglekit/llm_ensemble.hpp"
#include "junglekit/wire.hpp"

namespace junglekit {

struct UpdaterConfig {
  TimeMs update_period_ms = 60'000;
  std::size_t batch_max = 64;
  TimeMs lease_ms = 300'000;

  void validate() const {
    if (update_period_ms <= 0) throw ConfigError("updater.update_period_ms must be positive");
    if (batch_max < 1) throw ConfigError("updater.batch_max must be >= 1");
    if (lease_ms <= 0) throw ConfigError("updater.lease_ms must be positive");
    if (lease_ms < update_period_ms) throw ConfigError("updater.lease_ms must be >= update_period_ms");
  }
};

enum class PushStatus { applied, stale_ignored, sent, failed };

/// What the backend knows when it hands a snapshot to a link.
struct PushContext {
  TimeMs now = 0;
  bool inferred = false;               // produced by model inference this tick
  std::vector<std::string> model_ids;  // models consulted, when inferred
};

/// Backend's view of one edge node.
class EdgeLink {
 public:
  virtual ~EdgeLink() = default;
  virtual const std::string& name() const = 0;
  /// Throws LinkError when the edge is unreachable.
  virtual std::vector<MissRecord> drain(std::size_t max, TimeMs now) = 0;
  /// `sent` means accepted for asynchronous delivery.
  virtual PushStatus push(const Snapshot& snapshot, const PushContext& ctx) = 0;
};

/// Direct in-process link.
class LocalEdgeLink final : public EdgeLink {
 public:
  LocalEdgeLink(std::string name, EdgeNode& node) : name_(std::move(name)), node_(node) {}

  const std::string& name() const override { return name_; }
  std::vector<MissRecord> drain(std::size_t max, TimeMs now) override {
    return node_.drain_misses(max, now);
  }
  PushStatus push(const Snapshot& s, const PushContext& ctx) override {
    return node_.apply_update(s, ctx.now) == ApplyResult::applied ? PushStatus::applied
                                                                   : PushStatus::stale_ignored;
  }

 private:
  std::string name_;
  EdgeNode& node_;
};

enum class ActionKind { drained, answered, refreshed, pushed, failed };

inline constexpr std::string_view to_string(ActionKind k) noexcept {
  switch (k) {
    case ActionKind::drained: return "drained";
    case ActionKind::answered: return "answered";
    case ActionKind::refreshed: return "refreshed";
    case ActionKind::pushed: return "pushed";
    case ActionKind::failed: return "failed";
  }
  return "failed";
}

/// One line of the structured action log.
struct Action {
  ActionKind kind = ActionKind::drained;
  std::string edge;
  std::string user_id;
  QueryKey key;
  std::uint64_t version = 0;
  TimeMs at = 0;
  std::string detail;  // push outcome or failure reason
};

inline void to_json(json& j, const Action& a) {
  j = json{{"action", std::string(to_string(a.kind))},
           {"edge", a.edge},
           {"user_id", a.user_id},
           {"key", a.key},
           {"version", a.version},
           {"at", a.at},
           {"detail", a.detail}};
}

class Updater {
 public:
  Updater(UpdaterConfig config, LlmNode& llm) : config_(config), llm_(llm) { config_.validate(); }

  const UpdaterConfig& config() const noexcept { return config_; }

  void connect(EdgeLink& link) { edges_.push_back(EdgeState{&link, {}, {}}); }

  /// JSON-lines sink for every action; nullptr disables.
  void set_action_log(std::ostream* out) { action_log_ = out; }

  /// Periodic refresh of known snapshots; turned off to let a run wind down.
  void set_refresh_enabled(bool enabled) { refresh_enabled_ = enabled; }

  /// The user's source data changed: re-answer their snapshots next tick.
  void mark_dirty(const std::string& user_id) { dirty_.insert(user_id); }

  const Ledger& ledger() const noexcept { return ledger_; }
  const ServedVolume& served() const noexcept { return served_; }
  std::uint64_t answered_count() const noexcept { return answered_; }

  /// Failed pushes waiting for the next tick, across all edges.
  std::size_t outbox_size() const {
    std::size_t n = 0;
    for (const EdgeState& e : edges_) n += e.outbox.size();
    return n;
  }

  std::vector<Action> tick(TimeMs now) {
    if (last_tick_ && now < *last_tick_) throw ContractViolation("tick: time went backwards");
    last_tick_ = now;
    std::vector<Action> actions;
    for (EdgeState& edge : edges_) tick_edge(edge, now, actions);
    dirty_.clear();
    if (action_log_) {
      for (const Action& a : actions) *action_log_ << json(a).dump() << '\n';
    }
    return actions;
  }

 private:
  struct Known {
    MissRecord origin;  // the miss that first produced the key
    Snapshot latest;
  };

  struct EdgeState {
    EdgeLink* link;
    std::map<detail::UserKey, Known> known;
    std::deque<Snapshot> outbox;
  };

  void record(std::vector<Action>& actions, ActionKind kind, const EdgeState& edge,
              const std::string& user, QueryKey key, std::uint64_t version, TimeMs at,
              std::string detail = {}) {
    actions.push_back(Action{kind, edge.link->name(), user, key, version, at, std::move(detail)});
  }

  void push(EdgeState& edge, const Snapshot& s, const PushContext& ctx, std::vector<Action>& actions) {
    PushStatus status;
    std::string reason;
    try {
      status = edge.link->push(s, ctx);
    } catch (const LinkError& e) {
      status = PushStatus::failed;
      reason = e.what();
    }
    if (status == PushStatus::failed) {
      edge.outbox.push_back(s);
      record(actions, ActionKind::failed, edge, s.user_id, s.key, s.version, ctx.now,
             reason.empty() ? "push failed" : reason);
      return;
    }
    record(actions, ActionKind::pushed, edge, s.user_id, s.key, s.version, ctx.now,
           status == PushStatus::applied         ? "applied"
           : status == PushStatus::stale_ignored ? "stale_ignored"
                                                 : "sent");
  }

  std::vector<std::string> model_ids(const Answer& a) const {
    std::vector<std::string> ids;
    for (const Candidate& c : a.ranked) ids.push_back(c.model_id);
    return ids;
  }

  Answer infer(const MissRecord& miss, TimeMs now) {
    Answer a = llm_.answer(miss, now);
    ledger_.append(a.costs);
    served_ += a.served;
    ++answered_;
    return a;
  }

  void tick_edge(EdgeState& edge, TimeMs now, std::vector<Action>& actions) {
    std::deque<Snapshot> retry;
    retry.swap(edge.outbox);
    for (const Snapshot& s : retry) push(edge, s, PushContext{now, false, {}}, actions);

    std::vector<MissRecord> misses;
    try {
      misses = edge.link->drain(config_.batch_max, now);
    } catch (const LinkError& e) {
      record(actions, ActionKind::failed, edge, "", QueryKey{}, 0, now, std::string("drain: ") + e.what());
      return;
    }

    std::set<detail::UserKey> touched;
    for (const MissRecord& miss : misses) {
      record(actions, ActionKind::drained, edge, miss.user_id, miss.key, 0, now);
      Answer a = infer(miss, now);
      record(actions, ActionKind::answered, edge, miss.user_id, miss.key, a.snapshot.version, now,
             a.snapshot.model_id);
      detail::UserKey k{miss.user_id, miss.key};
      auto [it, inserted] = edge.known.try_emplace(k, Known{miss, a.snapshot});
      if (!inserted) it->second.latest = a.snapshot;
      touched.insert(std::move(k));
      push(edge, a.snapshot, PushContext{now, true, model_ids(a)}, actions);
    }

    if (!refresh_enabled_) return;
    for (auto& [k, known] : edge.known) {
      if (touched.contains(k)) continue;
      if (dirty_.contains(k.first)) {
        Answer a = infer(known.origin, now);
        known.latest = a.snapshot;
        record(actions, ActionKind::answered, edge, k.first, k.second, a.snapshot.version, now,
               a.snapshot.model_id);
        push(edge, known.latest, PushContext{now, true, model_ids(a)}, actions);
      } else {
        known.latest = llm_.revalidate(known.latest, now);
        record(actions, ActionKind::refreshed, edge, k.first, k.second, known.latest.version, now);
        push(edge, known.latest, PushContext{now, false, {}}, actions);
      }
    }
  }

  UpdaterConfig config_;
  LlmNode& llm_;
  std::vector<EdgeState> edges_;
  std::set<std::string> dirty_;
  bool refresh_enabled_ = true;
  std::optional<TimeMs> last_tick_;
  std::ostream* action_log_ = nullptr;
  Ledger ledger_;
  ServedVolume served_;
  std::uint64_t answered_ = 0;
};

}  // namespace junglekit
