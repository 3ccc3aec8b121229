#pragma once

// Backend side of the edge protocol: an EdgeLink that talks HTTP.

#include <cctype>
#include <cstdio>
#include <string>

#include <httplib.h>

#include "junglekit/updater.hpp"
#include "junglekit/wire.hpp"

namespace junglekit::net {

/// Percent-encodes everything outside the RFC 3986 unreserved set.
inline std::string encode_path_segment(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

class HttpEdgeLink final : public EdgeLink {
 public:
  /// `base_url` like "http://127.0.0.1:8080".
  HttpEdgeLink(std::string name, const std::string& base_url, int timeout_ms = 5000)
      : name_(std::move(name)), client_(base_url) {
    client_.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client_.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client_.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  }

  const std::string& name() const override { return name_; }

  std::vector<MissRecord> drain(std::size_t max, TimeMs) override {
    auto res = client_.Post("/v1/misses/drain", json{{"max", max}}.dump(), "application/json");
    if (!res) throw LinkError(name_ + ": drain failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw LinkError(name_ + ": drain returned HTTP " + std::to_string(res->status));
    try {
      return json::parse(res->body).get<std::vector<MissRecord>>();
    } catch (const std::exception& e) {
      throw LinkError(name_ + ": malformed drain response: " + e.what());
    }
  }

  /// Transport errors and non-200 answers count as failed pushes; the
  /// updater keeps them for retry.
  PushStatus push(const Snapshot& s, const PushContext&) override {
    const std::string path = "/v1/snapshots/" + encode_path_segment(s.user_id) + "/" + s.key.to_hex();
    auto res = client_.Put(path, json(s).dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    if (!res || res->status != 200) return PushStatus::failed;
    try {
      const auto result = json::parse(res->body).at("result").get<std::string>();
      if (result == "applied") return PushStatus::applied;
      if (result == "stale_ignored") return PushStatus::stale_ignored;
    } catch (const std::exception&) {
    }
    return PushStatus::failed;
  }

 private:
  std::string name_;
  httplib::Client client_;
};

}  // namespace junglekit::net
