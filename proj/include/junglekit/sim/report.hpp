#pragma once

#include <cinttypes>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "junglekit/cost_model.hpp"
#include "junglekit/wire.hpp"

namespace junglekit::sim {

struct LatencyPercentiles {
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;

  friend bool operator==(const LatencyPercentiles&, const LatencyPercentiles&) = default;
};

struct Staleness {
  TimeMs max_ms = 0;
  TimeMs p99_ms = 0;

  friend bool operator==(const Staleness&, const Staleness&) = default;
};

struct RunCounts {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t sessions = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses_enqueued = 0;
  std::uint64_t misses_deduplicated = 0;
  std::uint64_t misses_answered = 0;
  std::uint64_t inferences = 0;
  std::uint64_t pushes = 0;
  std::uint64_t push_failures = 0;
  std::uint64_t applied = 0;
  std::uint64_t stale_ignored = 0;
  std::uint64_t ticks = 0;

  friend bool operator==(const RunCounts&, const RunCounts&) = default;
};

/// Invariants measured during the run; all counters must be zero.
struct RunChecks {
  std::uint64_t serve_path_llm_calls = 0;
  std::uint64_t pii_payload_detections = 0;
  std::uint64_t edge_pii_rejections = 0;
  std::uint64_t staleness_violations = 0;
  std::uint64_t version_regressions = 0;
  std::uint64_t conservation_violations = 0;
  double max_propagation_delay_ms = 0.0;
  double staleness_bound_ms = 0.0;

  friend bool operator==(const RunChecks&, const RunChecks&) = default;
};

struct TokenCounts {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;

  friend bool operator==(const TokenCounts&, const TokenCounts&) = default;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  std::uint64_t event_count = 0;
  LatencyPercentiles read_latency;
  double hit_rate = 0.0;
  Staleness staleness;
  std::uint64_t pending_misses_final = 0;
  Money compound_cost;    // rounded to micro-units
  Money monolithic_cost;  // rounded to micro-units
  double cost_ratio = 0.0;  // from the exact totals
  RunCounts counts;
  std::map<std::string, TokenCounts> tokens_by_model;
  TokenCounts served_tokens;
  RunChecks checks;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Nearest-rank percentile of sorted values; 0 for an empty set.
template <typename T>
T nearest_rank(const std::vector<T>& sorted, double pct) {
  if (sorted.empty()) return T{};
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline Money money_from_string(const std::string& s) {
  long long whole = 0;
  unsigned long long frac = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%lld.%6llu%n", &whole, &frac, &consumed) != 2 ||
      static_cast<std::size_t>(consumed) != s.size() || s.size() - s.find('.') != 7) {
    throw WireError("malformed money amount '" + s + "'");
  }
  return Money::from_micro(whole * kMicroPerUnit + static_cast<std::int64_t>(frac));
}

inline void to_json(json& j, const TokenCounts& t) {
  j = json{{"input_tokens", t.input_tokens}, {"output_tokens", t.output_tokens}};
}
inline void from_json(const json& j, TokenCounts& t) {
  j.at("input_tokens").get_to(t.input_tokens);
  j.at("output_tokens").get_to(t.output_tokens);
}

inline void to_json(json& j, const MetricsReport& r) {
  j = json{{"seed", r.seed},
           {"event_count", r.event_count},
           {"read_latency", {{"p50_ms", r.read_latency.p50_ms}, {"p95_ms", r.read_latency.p95_ms},
                             {"p99_ms", r.read_latency.p99_ms}}},
           {"hit_rate", r.hit_rate},
           {"staleness", {{"max_ms", r.staleness.max_ms}, {"p99_ms", r.staleness.p99_ms}}},
           {"pending_misses_final", r.pending_misses_final},
           {"compound_cost", r.compound_cost.to_string()},
           {"monolithic_cost", r.monolithic_cost.to_string()},
           {"cost_ratio", r.cost_ratio},
           {"counts",
            {{"reads", r.counts.reads},
             {"writes", r.counts.writes},
             {"sessions", r.counts.sessions},
             {"hits", r.counts.hits},
             {"misses_enqueued", r.counts.misses_enqueued},
             {"misses_deduplicated", r.counts.misses_deduplicated},
             {"misses_answered", r.counts.misses_answered},
             {"inferences", r.counts.inferences},
             {"pushes", r.counts.pushes},
             {"push_failures", r.counts.push_failures},
             {"applied", r.counts.applied},
             {"stale_ignored", r.counts.stale_ignored},
             {"ticks", r.counts.ticks}}},
           {"token_totals", {{"by_model", r.tokens_by_model}, {"served", r.served_tokens}}},
           {"checks",
            {{"serve_path_llm_calls", r.checks.serve_path_llm_calls},
             {"pii_payload_detections", r.checks.pii_payload_detections},
             {"edge_pii_rejections", r.checks.edge_pii_rejections},
             {"staleness_violations", r.checks.staleness_violations},
             {"version_regressions", r.checks.version_regressions},
             {"conservation_violations", r.checks.conservation_violations},
             {"max_propagation_delay_ms", r.checks.max_propagation_delay_ms},
             {"staleness_bound_ms", r.checks.staleness_bound_ms}}}};
}

inline void from_json(const json& j, MetricsReport& r) {
  r = MetricsReport{};
  j.at("seed").get_to(r.seed);
  j.at("event_count").get_to(r.event_count);
  const json& lat = j.at("read_latency");
  lat.at("p50_ms").get_to(r.read_latency.p50_ms);
  lat.at("p95_ms").get_to(r.read_latency.p95_ms);
  lat.at("p99_ms").get_to(r.read_latency.p99_ms);
  j.at("hit_rate").get_to(r.hit_rate);
  j.at("staleness").at("max_ms").get_to(r.staleness.max_ms);
  j.at("staleness").at("p99_ms").get_to(r.staleness.p99_ms);
  j.at("pending_misses_final").get_to(r.pending_misses_final);
  r.compound_cost = money_from_string(j.at("compound_cost").get<std::string>());
  r.monolithic_cost = money_from_string(j.at("monolithic_cost").get<std::string>());
  j.at("cost_ratio").get_to(r.cost_ratio);
  const json& c = j.at("counts");
  c.at("reads").get_to(r.counts.reads);
  c.at("writes").get_to(r.counts.writes);
  c.at("sessions").get_to(r.counts.sessions);
  c.at("hits").get_to(r.counts.hits);
  c.at("misses_enqueued").get_to(r.counts.misses_enqueued);
  c.at("misses_deduplicated").get_to(r.counts.misses_deduplicated);
  c.at("misses_answered").get_to(r.counts.misses_answered);
  c.at("inferences").get_to(r.counts.inferences);
  c.at("pushes").get_to(r.counts.pushes);
  c.at("push_failures").get_to(r.counts.push_failures);
  c.at("applied").get_to(r.counts.applied);
  c.at("stale_ignored").get_to(r.counts.stale_ignored);
  c.at("ticks").get_to(r.counts.ticks);
  j.at("token_totals").at("by_model").get_to(r.tokens_by_model);
  j.at("token_totals").at("served").get_to(r.served_tokens);
  const json& k = j.at("checks");
  k.at("serve_path_llm_calls").get_to(r.checks.serve_path_llm_calls);
  k.at("pii_payload_detections").get_to(r.checks.pii_payload_detections);
  k.at("edge_pii_rejections").get_to(r.checks.edge_pii_rejections);
  k.at("staleness_violations").get_to(r.checks.staleness_violations);
  k.at("version_regressions").get_to(r.checks.version_regressions);
  k.at("conservation_violations").get_to(r.checks.conservation_violations);
  k.at("max_propagation_delay_ms").get_to(r.checks.max_propagation_delay_ms);
  k.at("staleness_bound_ms").get_to(r.checks.staleness_bound_ms);
}

inline std::string report_json(const MetricsReport& r) { return json(r).dump(2) + "\n"; }

inline std::string report_text(const MetricsReport& r) {
  std::string out;
  char line[160];
  auto add = [&out, &line](int n) { out.append(line, static_cast<std::size_t>(std::min<int>(n, sizeof line - 1))); };
  add(std::snprintf(line, sizeof line, "seed                  %" PRIu64 "\n", r.seed));
  add(std::snprintf(line, sizeof line, "events                %" PRIu64 "\n", r.event_count));
  add(std::snprintf(line, sizeof line, "reads / writes        %" PRIu64 " / %" PRIu64 "\n", r.counts.reads,
                    r.counts.writes));
  add(std::snprintf(line, sizeof line, "read latency ms       p50 %.3f  p95 %.3f  p99 %.3f\n",
                    r.read_latency.p50_ms, r.read_latency.p95_ms, r.read_latency.p99_ms));
  add(std::snprintf(line, sizeof line, "hit rate              %.6f\n", r.hit_rate));
  add(std::snprintf(line, sizeof line, "staleness ms          max %" PRId64 "  p99 %" PRId64 "  bound %.3f\n",
                    r.staleness.max_ms, r.staleness.p99_ms, r.checks.staleness_bound_ms));
  add(std::snprintf(line, sizeof line, "pending misses        %" PRIu64 "\n", r.pending_misses_final));
  add(std::snprintf(line, sizeof line, "inferences            %" PRIu64 "\n", r.counts.inferences));
  add(std::snprintf(line, sizeof line, "compound cost         %s\n", r.compound_cost.to_string().c_str()));
  add(std::snprintf(line, sizeof line, "monolithic cost       %s\n", r.monolithic_cost.to_string().c_str()));
  add(std::snprintf(line, sizeof line, "cost ratio            %.9f\n", r.cost_ratio));
  add(std::snprintf(line, sizeof line, "serve-path llm calls  %" PRIu64 "\n", r.checks.serve_path_llm_calls));
  add(std::snprintf(line, sizeof line, "pii in payloads       %" PRIu64 "\n", r.checks.pii_payload_detections));
  return out;
}

}  // namespace junglekit::sim
