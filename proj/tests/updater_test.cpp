#include <gtest/gtest.h>

#include <map>
#include <sstream>
#include <vector>

#include "junglekit/updater.hpp"

namespace junglekit {
namespace {

QueryRequest request(std::string user, std::string text) {
  return QueryRequest{std::move(user), "s1", std::move(text), std::nullopt};
}

// Local link that fails pushes on demand and counts applies per (key, version).
class FlakyLink final : public EdgeLink {
 public:
  explicit FlakyLink(EdgeNode& node) : inner_("edge", node), node_(node) {}

  const std::string& name() const override { return inner_.name(); }
  std::vector<MissRecord> drain(std::size_t max, TimeMs now) override {
    if (drain_down) throw LinkError("edge unreachable");
    return inner_.drain(max, now);
  }
  PushStatus push(const Snapshot& s, const PushContext& ctx) override {
    if (fail_next > 0) {
      --fail_next;
      return PushStatus::failed;
    }
    const PushStatus st = inner_.push(s, ctx);
    if (st == PushStatus::applied) ++applies[{s.key, s.version}];
    return st;
  }

  int fail_next = 0;
  bool drain_down = false;
  std::map<std::pair<QueryKey, std::uint64_t>, int> applies;

 private:
  LocalEdgeLink inner_;
  EdgeNode& node_;
};

struct Fixture {
  EdgeNode node;
  LlmNode llm{ModelRegistry::defaults()};
  Updater updater{UpdaterConfig{}, llm};
  FlakyLink link{node};
  Fixture() { updater.connect(link); }
};

TEST(Updater, EmptyTickDoesNothing) {
  Fixture f;
  EXPECT_TRUE(f.updater.tick(0).empty());
  EXPECT_TRUE(f.updater.ledger().empty());
}

TEST(Updater, AnswersOneMiss) {
  Fixture f;
  f.node.serve_query(request("u1", "what is the price"), 0);
  const auto actions = f.updater.tick(60'000);
  ASSERT_EQ(actions.size(), 3u);
  EXPECT_EQ(actions[0].kind, ActionKind::drained);
  EXPECT_EQ(actions[1].kind, ActionKind::answered);
  EXPECT_EQ(actions[2].kind, ActionKind::pushed);
  EXPECT_EQ(actions[2].detail, "applied");
  EXPECT_EQ(f.node.serve_query(request("u1", "what is the price"), 60'001).status, QueryStatus::hit);
  EXPECT_EQ(f.updater.ledger().size(), 2u);  // default model + reranker
  EXPECT_EQ(f.updater.answered_count(), 1u);
}

TEST(Updater, FailedPushRetriedNextTick) {
  Fixture f;
  f.node.serve_query(request("u1", "what is the price"), 0);
  f.link.fail_next = 1;
  const auto first = f.updater.tick(60'000);
  EXPECT_EQ(first.back().kind, ActionKind::failed);
  EXPECT_EQ(f.updater.outbox_size(), 1u);
  EXPECT_EQ(f.node.version_of("u1", query_key("what is the price")), 0u);

  f.updater.tick(120'000);
  EXPECT_EQ(f.updater.outbox_size(), 0u);
  EXPECT_EQ(f.node.version_of("u1", query_key("what is the price")), 2u);  // retry, then refresh
  for (const auto& [kv, n] : f.link.applies) EXPECT_EQ(n, 1);
  EXPECT_EQ(f.updater.answered_count(), 1u);  // no re-inference for the retry
}

TEST(Updater, RefreshRevalidatesWithoutCost) {
  Fixture f;
  f.node.serve_query(request("u1", "what is the price"), 0);
  f.updater.tick(60'000);
  const auto cost_records = f.updater.ledger().size();
  const auto actions = f.updater.tick(120'000);
  ASSERT_EQ(actions.size(), 2u);
  EXPECT_EQ(actions[0].kind, ActionKind::refreshed);
  EXPECT_EQ(f.updater.ledger().size(), cost_records);
  const auto s = f.node.snapshot("u1", query_key("what is the price"));
  EXPECT_EQ(s->version, 2u);
  EXPECT_EQ(s->generated_at, 120'000);
}

TEST(Updater, DirtyUsersAreReanswered) {
  Fixture f;
  f.node.serve_query(request("u1", "what is the price"), 0);
  f.node.serve_query(request("u2", "what is the price"), 0);
  f.updater.tick(60'000);
  f.updater.mark_dirty("u1");
  const auto actions = f.updater.tick(120'000);
  int answered = 0, refreshed = 0;
  for (const Action& a : actions) {
    answered += a.kind == ActionKind::answered;
    refreshed += a.kind == ActionKind::refreshed;
  }
  EXPECT_EQ(answered, 1);
  EXPECT_EQ(refreshed, 1);
  EXPECT_EQ(f.updater.answered_count(), 3u);
}

TEST(Updater, DrainFailureSkipsEdge) {
  Fixture f;
  f.node.serve_query(request("u1", "what is the price"), 0);
  f.link.drain_down = true;
  const auto actions = f.updater.tick(60'000);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, ActionKind::failed);
  f.link.drain_down = false;
  f.updater.tick(120'000);
  EXPECT_EQ(f.node.version_of("u1", query_key("what is the price")), 1u);
}

TEST(Updater, BatchLimitAndLiveness) {
  EdgeNode node;
  LlmNode llm(ModelRegistry::defaults());
  Updater updater(UpdaterConfig{60'000, 4, 300'000}, llm);
  LocalEdgeLink link("edge", node);
  updater.connect(link);
  for (int i = 0; i < 10; ++i) node.serve_query(request("u1", "question " + std::to_string(i)), 0);
  updater.set_refresh_enabled(false);
  int ticks = 0;
  while (node.ready_misses() + node.inflight_misses() > 0) {
    updater.tick(60'000 * ++ticks);
    ASSERT_LE(ticks, 3);
  }
  EXPECT_EQ(ticks, 3);
}

TEST(Updater, TimeMustNotGoBackwards) {
  Fixture f;
  f.updater.tick(100);
  EXPECT_THROW(f.updater.tick(50), ContractViolation);
}

TEST(Updater, ActionLogIsJsonLines) {
  Fixture f;
  std::ostringstream log;
  f.updater.set_action_log(&log);
  f.node.serve_query(request("u1", "what is the price"), 0);
  f.updater.tick(60'000);
  std::istringstream in(log.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_TRUE(j.contains("action"));
    EXPECT_EQ(j["edge"], "edge");
    ++lines;
  }
  EXPECT_EQ(lines, 3);
}

TEST(Updater, RejectsBadConfig) {
  LlmNode llm(ModelRegistry::defaults());
  EXPECT_THROW(Updater(UpdaterConfig{0, 64, 300'000}, llm), ConfigError);
  EXPECT_THROW(Updater(UpdaterConfig{60'000, 0, 300'000}, llm), ConfigError);
  EXPECT_THROW(Updater(UpdaterConfig{60'000, 64, 1'000}, llm), ConfigError);
}

}  // namespace
}  // namespace junglekit
