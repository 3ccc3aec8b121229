#pragma once

// HTTP front for an EdgeNode:
//   POST /v1/query                      QueryRequest -> QueryResponse (422 on PII)
//   PUT  /v1/snapshots/{user}/{key-hex} Snapshot -> {"result": ...}
//   POST /v1/misses/drain               {"max": N} -> [MissRecord]
//   GET  /v1/healthz                    {"status": "ok"}

#include <chrono>
#include <functional>
#include <string>

#include <httplib.h>

#include "junglekit/edge_node.hpp"
#include "junglekit/wire.hpp"

namespace junglekit::net {

using Clock = std::function<TimeMs()>;

inline TimeMs wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

class EdgeServer {
 public:
  explicit EdgeServer(EdgeNode& node, Clock clock = wall_clock_ms) : node_(node), clock_(std::move(clock)) {
    routes();
  }

  EdgeServer(const EdgeServer&) = delete;
  EdgeServer& operator=(const EdgeServer&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds an ephemeral port and returns it; serve with listen_after_bind().
  int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    // Miss records echo raw query text, which need not be valid UTF-8.
    res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
  }

  static void error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    reply(res, status, json{{"error", code}, {"message", message}});
  }

  /// Runs `f` with the parsed body; malformed input becomes a 400.
  template <typename F>
  static void with_body(const httplib::Request& req, httplib::Response& res, F&& f) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      error(res, 400, "bad_request", e.what());
      return;
    }
    try {
      f(body);
    } catch (const PiiRejected& e) {
      error(res, 422, "pii_rejected", e.what());
    } catch (const json::exception& e) {
      error(res, 400, "bad_request", e.what());
    } catch (const WireError& e) {
      error(res, 400, "bad_request", e.what());
    } catch (const ContractViolation& e) {
      error(res, 400, "bad_request", e.what());
    }
  }

  void routes() {
    server_.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) {
      with_body(req, res, [&](const json& body) {
        const auto q = body.get<QueryRequest>();
        reply(res, 200, json(node_.serve_query(q, clock_())));
      });
    });

    server_.Put(R"(/v1/snapshots/([^/]+)/([0-9a-f]{16}))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  with_body(req, res, [&](const json& body) {
                    const auto s = body.get<Snapshot>();
                    if (s.user_id != req.matches[1].str() || s.key.to_hex() != req.matches[2].str()) {
                      error(res, 400, "bad_request", "path does not match snapshot user_id/key");
                      return;
                    }
                    const ApplyResult r = node_.apply_update(s, clock_());
                    reply(res, 200, json{{"result", std::string(to_string(r))}});
                  });
                });

    server_.Post("/v1/misses/drain", [this](const httplib::Request& req, httplib::Response& res) {
      with_body(req, res, [&](const json& body) {
        const auto max = body.at("max").get<std::int64_t>();
        if (max < 1) throw WireError("max must be >= 1");
        reply(res, 200, json(node_.drain_misses(static_cast<std::size_t>(max), clock_())));
      });
    });

    server_.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, json{{"status", "ok"}});
    });
  }

  EdgeNode& node_;
  Clock clock_;
  httplib::Server server_;
};

}  // namespace junglekit::net
