#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "junglekit/net/edge_server.hpp"
#include "junglekit/net/http_edge_link.hpp"
#include "junglekit/net/service_config.hpp"
#include "junglekit/updater.hpp"
#include "junglekit/wire.hpp"

namespace junglekit {
namespace {

Snapshot snapshot_for(const std::string& user, const std::string& text, std::uint64_t version,
                      TimeMs generated_at = 0) {
  Snapshot s;
  s.user_id = user;
  s.key = query_key(text);
  s.answer_text = "answer v" + std::to_string(version);
  s.language = LanguageTag::en;
  s.model_id = "default-small";
  s.embedding = embed(text);
  s.version = version;
  s.generated_at = generated_at;
  return s;
}

// ---- JSON encodings --------------------------------------------------------

TEST(Wire, QueryRequestNullHint) {
  const QueryRequest r{"u1", "s1", "what is the price", std::nullopt};
  const json j = r;
  EXPECT_TRUE(j.at("language_hint").is_null());
  const auto back = j.get<QueryRequest>();
  EXPECT_EQ(back.user_id, "u1");
  EXPECT_EQ(back.query_text, "what is the price");
  EXPECT_FALSE(back.language_hint);
  // A missing hint reads as null too.
  const auto bare = json::parse(R"({"user_id":"u","session_id":"s","query_text":"q"})").get<QueryRequest>();
  EXPECT_FALSE(bare.language_hint);
}

TEST(Wire, SnapshotRoundTrip) {
  const Snapshot s = snapshot_for("u1", "the price of shipping", 7, 1234);
  const json j = s;
  EXPECT_EQ(j.at("key").get<std::string>().size(), 16u);
  EXPECT_EQ(j.at("generated_at"), 1234);
  EXPECT_EQ(j.at("language"), "en");
  EXPECT_EQ(j.get<Snapshot>(), s);
}

TEST(Wire, QueryResponseMissHasNulls) {
  QueryResponse r;
  r.status = QueryStatus::miss_enqueued;
  const json j = r;
  EXPECT_EQ(j.at("status"), "miss_enqueued");
  EXPECT_TRUE(j.at("snapshot").is_null());
  EXPECT_TRUE(j.at("similarity").is_null());
  EXPECT_TRUE(j.at("age_ms").is_null());
  const auto back = j.get<QueryResponse>();
  EXPECT_EQ(back.status, QueryStatus::miss_enqueued);
  EXPECT_FALSE(back.snapshot);
}

TEST(Wire, RejectsMalformedKeyAndLanguage) {
  json j = snapshot_for("u", "abc def", 1);
  j["key"] = "ABCDEF0123456789";
  EXPECT_THROW(j.get<Snapshot>(), WireError);
  j["key"] = "abc";
  EXPECT_THROW(j.get<Snapshot>(), WireError);
  j = snapshot_for("u", "abc def", 1);
  j["language"] = "de";
  EXPECT_THROW(j.get<Snapshot>(), WireError);
}

TEST(Wire, MissRecordRoundTrip) {
  const MissRecord m{"u9", query_key("le prix"), "le prix", LanguageTag::fr, 55};
  const auto back = json(m).get<MissRecord>();
  EXPECT_EQ(back.user_id, "u9");
  EXPECT_EQ(back.key, m.key);
  EXPECT_EQ(back.language_hint, LanguageTag::fr);
  EXPECT_EQ(back.enqueued_at, 55);
}

TEST(Wire, LedgerFileRoundTrip) {
  Ledger l;
  l.append(CostRecord{"default-small", 10, 20, 5});
  l.append(CostRecord{"reranker", 0, 20, 5});
  const json j = ledger_to_json(l, ServedVolume{10, 20});
  const LedgerFile f = ledger_from_json(j);
  ASSERT_EQ(f.ledger.size(), 2u);
  EXPECT_EQ(f.ledger.records()[1].model_id, "reranker");
  EXPECT_EQ(f.served, (ServedVolume{10, 20}));
  EXPECT_THROW(ledger_from_json(json::object()), ConfigError);
}

TEST(ServiceConfig, EdgeStrict) {
  const auto c = net::edge_service_from_json(json::parse(R"({"port": 9000, "cache": {"capacity": 8}})"));
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.node.cache.capacity, 8u);
  EXPECT_THROW(net::edge_service_from_json(json::parse(R"({"prot": 9000})")), ConfigError);
  EXPECT_THROW(net::edge_service_from_json(json::parse(R"({"cache": {"capacity": 0}})")), ConfigError);
}

TEST(ServiceConfig, BackendNeedsEdges) {
  EXPECT_THROW(net::backend_service_from_json(json::object()), ConfigError);
  const auto c = net::backend_service_from_json(
      json::parse(R"({"edges": [{"name": "e", "url": "http://127.0.0.1:1"}], "max_ticks": 2})"));
  EXPECT_EQ(c.edges.size(), 1u);
  EXPECT_EQ(c.max_ticks, 2u);
  EXPECT_THROW(net::backend_service_from_json(json::parse(R"({"edges": [{"name": "e"}]})")), ConfigError);
}

TEST(PathEncoding, EscapesReserved) {
  EXPECT_EQ(net::encode_path_segment("u00001"), "u00001");
  EXPECT_EQ(net::encode_path_segment("a b/c%"), "a%20b%2Fc%25");
}

// ---- live server -----------------------------------------------------------

class EdgeServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<net::EdgeServer>(node_, [this] { return now_.load(); });
    port_ = server_->bind_any();
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  EdgeNode node_;
  std::atomic<TimeMs> now_{1000};
  std::unique_ptr<net::EdgeServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(EdgeServerTest, Healthz) {
  auto res = client_->Get("/v1/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body), (json{{"status", "ok"}}));
}

TEST_F(EdgeServerTest, MissThenPutThenHit) {
  const json q = QueryRequest{"u1", "s1", "what is the price of shipping", std::nullopt};
  auto res = post("/v1/query", q);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("status"), "miss_enqueued");

  res = post("/v1/misses/drain", json{{"max", 10}});
  ASSERT_TRUE(res);
  const auto misses = json::parse(res->body).get<std::vector<MissRecord>>();
  ASSERT_EQ(misses.size(), 1u);
  EXPECT_EQ(misses[0].key, query_key("what is the price of shipping"));
  EXPECT_EQ(misses[0].enqueued_at, 1000);

  const Snapshot s = snapshot_for("u1", "what is the price of shipping", 1, 1000);
  res = client_->Put("/v1/snapshots/u1/" + s.key.to_hex(), json(s).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body), (json{{"result", "applied"}}));
  res = client_->Put("/v1/snapshots/u1/" + s.key.to_hex(), json(s).dump(), "application/json");
  EXPECT_EQ(json::parse(res->body), (json{{"result", "stale_ignored"}}));

  now_ = 1400;
  res = post("/v1/query", q);
  ASSERT_TRUE(res);
  const auto r = json::parse(res->body).get<QueryResponse>();
  EXPECT_EQ(r.status, QueryStatus::hit);
  ASSERT_TRUE(r.snapshot);
  EXPECT_EQ(*r.snapshot, s);
  EXPECT_EQ(*r.age_ms, 400);
  EXPECT_EQ(*r.similarity, 1.0);
}

TEST_F(EdgeServerTest, PiiIs422) {
  auto res = post("/v1/query", QueryRequest{"u1", "s1", "card 4111 1111 1111 1111", std::nullopt});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(json::parse(res->body).at("error"), "pii_rejected");
  EXPECT_EQ(node_.ready_misses(), 0u);
}

TEST_F(EdgeServerTest, BadBodiesAre400) {
  auto res = client_->Post("/v1/query", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = post("/v1/query", json{{"user_id", "u1"}});
  EXPECT_EQ(res->status, 400);
  res = post("/v1/query", QueryRequest{"", "s1", "hello there", std::nullopt});
  EXPECT_EQ(res->status, 400);
  res = post("/v1/misses/drain", json{{"max", 0}});
  EXPECT_EQ(res->status, 400);
  res = post("/v1/misses/drain", json::object());
  EXPECT_EQ(res->status, 400);
}

TEST_F(EdgeServerTest, PutPathMustMatchBody) {
  const Snapshot s = snapshot_for("u1", "hello there friend", 1);
  auto res = client_->Put("/v1/snapshots/u2/" + s.key.to_hex(), json(s).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client_->Put("/v1/snapshots/u1/0000000000000000", json(s).dump(), "application/json");
  EXPECT_EQ(res->status, 400);
  res = client_->Put("/v1/snapshots/u1/NOTHEX", json(s).dump(), "application/json");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(node_.version_of("u1", s.key), 0u);
}

TEST_F(EdgeServerTest, LinkDrivesUpdaterOverHttp) {
  LlmNode llm(ModelRegistry::defaults());
  Updater updater(UpdaterConfig{}, llm);
  net::HttpEdgeLink link("edge-a", url());
  updater.connect(link);

  const json q = QueryRequest{"seller 1", "s1", "le prix de la livraison", std::nullopt};
  ASSERT_EQ(post("/v1/query", q)->status, 200);
  const auto actions = updater.tick(2000);
  ASSERT_EQ(actions.size(), 3u);
  EXPECT_EQ(actions[2].kind, ActionKind::pushed);
  EXPECT_EQ(actions[2].detail, "applied");

  const auto r = json::parse(post("/v1/query", q)->body).get<QueryResponse>();
  ASSERT_EQ(r.status, QueryStatus::hit);
  EXPECT_EQ(r.snapshot->user_id, "seller 1");
  EXPECT_EQ(r.snapshot->language, LanguageTag::fr);
  EXPECT_EQ(node_.stats().serve_path_llm_calls, 0u);

  // Refresh tick: revalidated version applied over the wire.
  updater.tick(3000);
  EXPECT_EQ(node_.version_of("seller 1", query_key("le prix de la livraison")), 2u);
}

TEST(HttpEdgeLink, UnreachableEdge) {
  // Grab a free port, then close it so nothing listens there.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  net::HttpEdgeLink link("dead", "http://127.0.0.1:" + std::to_string(port), 200);
  EXPECT_THROW(link.drain(4, 0), LinkError);
  EXPECT_EQ(link.push(snapshot_for("u", "abc def", 1), PushContext{}), PushStatus::failed);

  LlmNode llm(ModelRegistry::defaults());
  Updater updater(UpdaterConfig{}, llm);
  updater.connect(link);
  const auto actions = updater.tick(0);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, ActionKind::failed);
}

}  // namespace
}  // namespace junglekit
