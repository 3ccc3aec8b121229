#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "junglekit/edge_node.hpp"
#include "junglekit/llm_ensemble.hpp"

namespace junglekit {
namespace {

namespace fs = std::filesystem;

QueryRequest request(std::string user, std::string text) {
  return QueryRequest{std::move(user), "s1", std::move(text), std::nullopt};
}

Snapshot snapshot_for(const std::string& user, const std::string& text, std::uint64_t version,
                      TimeMs generated_at = 0) {
  Snapshot s;
  s.user_id = user;
  s.key = query_key(text);
  s.answer_text = "answer to " + text + " v" + std::to_string(version);
  s.language = LanguageTag::en;
  s.model_id = "default-small";
  s.embedding = embed(text);
  s.version = version;
  s.generated_at = generated_at;
  return s;
}

fs::path temp_log(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("junglekit_" + name + "_" + std::to_string(::getpid()));
  fs::remove(p);
  return p;
}

TEST(EdgeNode, MissThenHitAfterApply) {
  EdgeNode node;
  const auto r1 = node.serve_query(request("u1", "price of blue widgets"), 10);
  EXPECT_EQ(r1.status, QueryStatus::miss_enqueued);
  EXPECT_FALSE(r1.snapshot.has_value());
  EXPECT_TRUE(node.miss_pending("u1", query_key("price of blue widgets")));

  EXPECT_EQ(node.apply_update(snapshot_for("u1", "price of blue widgets", 1, 5), 20), ApplyResult::applied);
  EXPECT_FALSE(node.miss_pending("u1", query_key("price of blue widgets")));

  const auto r2 = node.serve_query(request("u1", "Price of  blue widgets"), 30);
  ASSERT_EQ(r2.status, QueryStatus::hit);
  EXPECT_EQ(r2.snapshot->version, 1u);
  EXPECT_EQ(*r2.age_ms, 25);
  EXPECT_DOUBLE_EQ(*r2.similarity, 1.0);
}

TEST(EdgeNode, CachesArePerUser) {
  EdgeNode node;
  node.apply_update(snapshot_for("u1", "price of blue widgets", 1), 0);
  EXPECT_EQ(node.serve_query(request("u2", "price of blue widgets"), 1).status, QueryStatus::miss_enqueued);
}

TEST(EdgeNode, DuplicateMissesCollapse) {
  EdgeNode node;
  for (int i = 0; i < 5; ++i) node.serve_query(request("u1", "same question"), i);
  node.serve_query(request("u2", "same question"), 6);
  const auto drained = node.drain_misses(10, 10);
  ASSERT_EQ(drained.size(), 2u);
  EXPECT_EQ(drained[0].user_id, "u1");
  EXPECT_EQ(drained[0].enqueued_at, 0);
  EXPECT_EQ(node.stats().misses_deduplicated, 4u);
}

TEST(EdgeNode, DrainIsFifoAndBounded) {
  EdgeNode node;
  for (int i = 0; i < 5; ++i) node.serve_query(request("u1", "question number " + std::to_string(i)), i);
  const auto first = node.drain_misses(3, 10);
  ASSERT_EQ(first.size(), 3u);
  EXPECT_EQ(first[0].query_text, "question number 0");
  EXPECT_EQ(first[2].query_text, "question number 2");
  const auto second = node.drain_misses(3, 10);
  ASSERT_EQ(second.size(), 2u);
  EXPECT_EQ(second[0].query_text, "question number 3");
  EXPECT_THROW(node.drain_misses(0, 10), ContractViolation);
}

TEST(EdgeNode, ExpiredLeaseRequeuesInOriginalOrder) {
  EdgeNode node(EdgeNodeConfig{{}, 100});
  node.serve_query(request("u1", "first question"), 0);
  node.serve_query(request("u1", "second question"), 1);
  ASSERT_EQ(node.drain_misses(1, 10).size(), 1u);
  EXPECT_EQ(node.inflight_misses(), 1u);
  // Lease still live: only the second record is available.
  auto mid = node.drain_misses(10, 50);
  ASSERT_EQ(mid.size(), 1u);
  EXPECT_EQ(mid[0].query_text, "second question");
  // Both leases have lapsed by t = 200.
  auto late = node.drain_misses(10, 200);
  ASSERT_EQ(late.size(), 2u);
  EXPECT_EQ(late[0].query_text, "first question");
  // A query for an in-flight key is still deduplicated.
  node.serve_query(request("u1", "first question"), 201);
  EXPECT_EQ(node.stats().misses_enqueued, 2u);
}

TEST(EdgeNode, StaleUpdatesIgnoredButClearMiss) {
  EdgeNode node;
  node.apply_update(snapshot_for("u1", "q one two", 3), 0);
  node.serve_query(request("u1", "completely different"), 1);
  EXPECT_EQ(node.apply_update(snapshot_for("u1", "q one two", 2), 2), ApplyResult::stale_ignored);
  EXPECT_EQ(node.apply_update(snapshot_for("u1", "q one two", 3), 2), ApplyResult::stale_ignored);
  EXPECT_EQ(node.snapshot("u1", query_key("q one two"))->version, 3u);

  auto late = snapshot_for("u1", "completely different", 1);
  node.drain_misses(10, 3);
  EXPECT_EQ(node.apply_update(late, 4), ApplyResult::applied);
  EXPECT_EQ(node.apply_update(late, 5), ApplyResult::stale_ignored);
  EXPECT_FALSE(node.miss_pending("u1", late.key));
}

TEST(EdgeNode, VersionHighWaterSurvivesEviction) {
  EdgeNode node(EdgeNodeConfig{CacheConfig{1, 0.85}, 1000});
  node.apply_update(snapshot_for("u1", "first key text", 5), 0);
  node.apply_update(snapshot_for("u1", "second key text", 1), 1);
  EXPECT_FALSE(node.snapshot("u1", query_key("first key text")).has_value());
  EXPECT_EQ(node.apply_update(snapshot_for("u1", "first key text", 4), 2), ApplyResult::stale_ignored);
  EXPECT_EQ(node.version_of("u1", query_key("first key text")), 5u);
}

TEST(EdgeNode, RejectsPiiAndBadUpdates) {
  EdgeNode node;
  EXPECT_THROW(node.serve_query(request("u1", "mail me at a@b.com"), 0), PiiRejected);
  EXPECT_EQ(node.stats().pii_rejections, 1u);
  EXPECT_EQ(node.ready_misses(), 0u);
  EXPECT_THROW(node.serve_query(request("", "hello there"), 0), ContractViolation);
  EXPECT_THROW(node.apply_update(snapshot_for("u1", "abc def", 0), 0), ContractViolation);
  EXPECT_THROW(node.apply_update(snapshot_for("", "abc def", 1), 0), ContractViolation);
}

TEST(EdgeNode, AgeNeverNegative) {
  EdgeNode node;
  node.apply_update(snapshot_for("u1", "future dated", 1, 500), 0);
  const auto r = node.serve_query(request("u1", "future dated"), 100);
  ASSERT_EQ(r.status, QueryStatus::hit);
  EXPECT_EQ(*r.age_ms, 0);
}

TEST(EdgeNode, ServePathNeverCallsModels) {
  EdgeNode node;
  LlmNode llm(ModelRegistry::defaults());
  for (int i = 0; i < 50; ++i) {
    node.serve_query(request("u1", "question " + std::to_string(i % 7)), i);
    for (const MissRecord& m : node.drain_misses(4, i)) node.apply_update(llm.answer(m, i).snapshot, i);
  }
  EXPECT_EQ(node.stats().serve_path_llm_calls, 0u);
  EXPECT_GT(node.stats().hits, 0u);
}

// Concurrent readers and writers: every applied version is eventually the
// stored one and counters add up.
TEST(EdgeNode, ConcurrentServeAndApply) {
  EdgeNode node;
  constexpr int kUsers = 8;
  constexpr int kVersions = 200;
  std::atomic<std::uint64_t> responses{0};
  std::vector<std::thread> threads;
  for (int u = 0; u < kUsers; ++u) {
    threads.emplace_back([&node, u] {
      const std::string user = "user" + std::to_string(u);
      for (int v = 1; v <= kVersions; ++v) node.apply_update(snapshot_for(user, "shared question", v), v);
    });
    threads.emplace_back([&node, &responses, u] {
      const std::string user = "user" + std::to_string(u);
      for (int i = 0; i < kVersions; ++i) {
        node.serve_query(request(user, "shared question"), i);
        ++responses;
      }
    });
  }
  threads.emplace_back([&node] {
    for (int i = 0; i < 100; ++i) node.drain_misses(5, i);
  });
  for (auto& t : threads) t.join();

  const EdgeStats s = node.stats();
  EXPECT_EQ(s.queries, responses.load());
  EXPECT_EQ(s.hits + s.misses_enqueued + s.misses_deduplicated, s.queries);
  EXPECT_EQ(s.applied, static_cast<std::uint64_t>(kUsers * kVersions));
  for (int u = 0; u < kUsers; ++u) {
    EXPECT_EQ(node.snapshot("user" + std::to_string(u), query_key("shared question"))->version,
              static_cast<std::uint64_t>(kVersions));
  }
}

TEST(SnapshotLog, ReplayRestoresState) {
  const fs::path path = temp_log("replay");
  {
    EdgeNode node;
    node.attach_log(path);
    node.apply_update(snapshot_for("u1", "first question", 1, 10), 10);
    node.apply_update(snapshot_for("u1", "first question", 2, 20), 20);
    node.apply_update(snapshot_for("u1", "first question", 1, 30), 30);  // stale, not logged
    node.apply_update(snapshot_for("u2", "second question", 7, 40), 40);
  }
  EdgeNode restarted;
  EXPECT_EQ(restarted.attach_log(path), 3u);
  EXPECT_EQ(restarted.snapshot("u1", query_key("first question"))->version, 2u);
  EXPECT_EQ(restarted.version_of("u2", query_key("second question")), 7u);
  EXPECT_EQ(restarted.serve_query(request("u2", "second question"), 50).status, QueryStatus::hit);
  fs::remove(path);
}

TEST(SnapshotLog, TornTailIsDropped) {
  const fs::path path = temp_log("torn");
  {
    EdgeNode node;
    node.attach_log(path);
    node.apply_update(snapshot_for("u1", "kept question", 1), 0);
  }
  const auto good_size = fs::file_size(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    const char partial[] = {static_cast<char>(200), 0, 0, 0, '{', '"'};
    out.write(partial, sizeof partial);
  }
  {
    EdgeNode node;
    EXPECT_EQ(node.attach_log(path), 1u);
    EXPECT_EQ(fs::file_size(path), good_size);
    node.apply_update(snapshot_for("u1", "after restart", 1), 1);
  }
  EdgeNode again;
  EXPECT_EQ(again.attach_log(path), 2u);
  fs::remove(path);
}

}  // namespace
}  // namespace junglekit
