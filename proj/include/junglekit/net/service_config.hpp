#pragma once

// Config files for the `serve edge` and `serve backend` processes.

#include <string>
#include <vector>

#include "junglekit/edge_node.hpp"
#include "junglekit/updater.hpp"
#include "junglekit/wire.hpp"

namespace junglekit::net {

struct EdgeServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  EdgeNodeConfig node;
  std::string snapshot_log;  // empty: no persistence
};

struct EdgeEndpoint {
  std::string name;
  std::string url;
};

struct BackendServiceConfig {
  std::vector<EdgeEndpoint> edges;
  UpdaterConfig updater;
  ModelRegistry registry = ModelRegistry::defaults();
  std::string action_log;     // empty: stdout
  std::uint64_t max_ticks = 0;  // 0: run until killed
  int timeout_ms = 5000;
};

inline EdgeServiceConfig edge_service_from_json(const json& j) {
  EdgeServiceConfig c;
  ObjectReader r(j, "");
  r.get("host", c.host);
  r.get("port", c.port);
  r.with("cache", [&c](const json& v, const std::string& path) {
    ObjectReader cr(v, path);
    cr.get("capacity", c.node.cache.capacity);
    cr.get("similarity_threshold", c.node.cache.similarity_threshold);
    cr.finish();
  });
  r.get("lease_ms", c.node.lease_ms);
  r.get("snapshot_log", c.snapshot_log);
  r.finish();
  if (c.port < 0 || c.port > 65535) throw ConfigError("port must be in [0, 65535]");
  c.node.validate();
  return c;
}

inline BackendServiceConfig backend_service_from_json(const json& j) {
  BackendServiceConfig c;
  ObjectReader r(j, "");
  r.with("edges", [&c](const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + " must be an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      EdgeEndpoint e;
      ObjectReader er(v[i], path + "[" + std::to_string(i) + "]");
      er.get("name", e.name);
      er.get("url", e.url);
      er.finish();
      if (e.name.empty() || e.url.empty()) throw ConfigError(path + ": every edge needs a name and a url");
      c.edges.push_back(std::move(e));
    }
  });
  r.with("updater", [&c](const json& v, const std::string& path) {
    ObjectReader u(v, path);
    u.get("update_period_ms", c.updater.update_period_ms);
    u.get("batch_max", c.updater.batch_max);
    u.get("lease_ms", c.updater.lease_ms);
    u.finish();
  });
  r.with("registry", [&c](const json& v, const std::string&) { c.registry = registry_from_json(v); });
  r.get("action_log", c.action_log);
  r.get("max_ticks", c.max_ticks);
  r.get("timeout_ms", c.timeout_ms);
  r.finish();
  if (c.edges.empty()) throw ConfigError("edges must list at least one edge");
  if (c.timeout_ms < 1) throw ConfigError("timeout_ms must be >= 1");
  c.updater.validate();
  return c;
}

}  // namespace junglekit::net
