// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// fails. Tolerances are fixed here, not taken from the command line.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "junglekit/core.hpp"
#include "junglekit/edge_node.hpp"
#include "junglekit/semantic_cache.hpp"
#include "junglekit/sim/report.hpp"
#include "junglekit/sim/simulator.hpp"
#include "support/cache_oracle.hpp"
#include "support/generators.hpp"

namespace {

using namespace junglekit;
using namespace junglekit::sim;
using Decimal = boost::multiprecision::cpp_dec_float_50;
namespace fs = std::filesystem;

constexpr double kRatioLimit = 0.01;
constexpr double kOracleRelTol = 1e-9;
constexpr double kRuntimeLimitS = 60.0;
constexpr std::uint64_t kBudgetTokensLo = 2'199'000;
constexpr std::uint64_t kBudgetTokensHi = 2'201'000;
constexpr double kP50LimitMs = 300.0;
constexpr double kP99LimitMs = 1000.0;
constexpr double kScaleRelTol = 0.01;
constexpr int kStalenessSeeds = 20;
constexpr int kCacheSequences = 1000;
constexpr int kPiiQueries = 1000;
constexpr double kPushFailureRate = 0.20;

const std::string kSource = JUNGLEKIT_SOURCE_DIR;

int failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s  %d  %s  (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Decimal value of a JSON number as written in the file.
Decimal decimal(const json& number) { return Decimal(number.dump()); }

/// Closed-form cost ratio from token totals and the shipped pricing file,
/// in 50-digit decimal arithmetic.
Decimal oracle_ratio(const MetricsReport& r) {
  const json pricing = json::parse(slurp(kSource + "/configs/pricing.json"));
  const Decimal million(1'000'000);
  Decimal compound = 0;
  for (const auto& [model, t] : r.tokens_by_model) {
    const json& p = pricing.at("models").at(model);
    compound += (Decimal(t.input_tokens) * decimal(p.at("price_in")) +
                 Decimal(t.output_tokens) * decimal(p.at("price_out"))) /
                million;
  }
  const Decimal served = Decimal(r.served_tokens.input_tokens) + Decimal(r.served_tokens.output_tokens);
  const Decimal monolithic = served * decimal(pricing.at("monolithic_blended")) / million;
  return compound / monolithic;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

SimConfig default_config() { return load_config(kSource + "/configs/default.json"); }

struct TimedRun {
  MetricsReport report;
  double seconds = 0.0;
};

TimedRun default_run() {
  const SimConfig config = default_config();
  const auto t0 = std::chrono::steady_clock::now();
  MetricsReport r = run(config);
  return {std::move(r), std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
}

void cost_criterion(const TimedRun& run) {
  const MetricsReport& r = run.report;
  const double secs = run.seconds;

  const Decimal oracle = oracle_ratio(r);
  const double oracle_d = oracle.convert_to<double>();
  const double err = std::abs(r.cost_ratio - oracle_d) / oracle_d;
  verdict(1, r.counts.reads == 10'000 && r.cost_ratio < kRatioLimit && err <= kOracleRelTol && secs < kRuntimeLimitS,
          "default run: cost ratio < 0.01, matches decimal oracle, runtime < 60 s",
          fmt("reads %llu, ratio %.12f, oracle %.12f, rel err %.3g, %.2f s",
              static_cast<unsigned long long>(r.counts.reads), r.cost_ratio, oracle_d, err, secs));
}

void latency_criterion(const MetricsReport& r) {
  const std::string golden = slurp(kSource + "/tests/golden/default_report.json");
  const bool golden_ok = report_json(r) == golden;
  verdict(3, r.read_latency.p50_ms < kP50LimitMs && r.read_latency.p99_ms < kP99LimitMs && golden_ok,
          "read latency p50 < 300 ms, p99 < 1000 ms, golden report matches byte for byte",
          fmt("p50 %.3f ms, p99 %.3f ms, golden %s", r.read_latency.p50_ms, r.read_latency.p99_ms,
              golden_ok ? "identical" : "differs"));
}

void budget_criterion() {
  const std::uint64_t tokens = tokens_for_budget(Money::from_micro(100 * kMicroPerUnit),
                                                 PricingTable{}.monolithic_blended());
  verdict(2, tokens >= kBudgetTokensLo && tokens <= kBudgetTokensHi,
          "tokens_for_budget(100) with default monolithic price in [2,199,000, 2,201,000]",
          fmt("%llu tokens", static_cast<unsigned long long>(tokens)));
}

void latency_scale_criterion() {
  SimConfig slow = default_config();
  slow.llm_latency_scale = 10.0;
  auto fast_f = std::async(std::launch::async, [] { return run(default_config()); });
  const MetricsReport s = run(slow);
  const MetricsReport f = fast_f.get();
  const double d50 = rel(f.read_latency.p50_ms, s.read_latency.p50_ms);
  const double d95 = rel(f.read_latency.p95_ms, s.read_latency.p95_ms);
  const double d99 = rel(f.read_latency.p99_ms, s.read_latency.p99_ms);
  const bool ok = d50 < kScaleRelTol && d95 < kScaleRelTol && d99 < kScaleRelTol &&
                  f.checks.serve_path_llm_calls == 0 && s.checks.serve_path_llm_calls == 0;
  verdict(4, ok, "LLM latency x1 vs x10: read percentiles within 1%, zero serve-path LLM calls",
          fmt("rel diff p50 %.3g p95 %.3g p99 %.3g; serve-path calls %llu / %llu", d50, d95, d99,
              static_cast<unsigned long long>(f.checks.serve_path_llm_calls),
              static_cast<unsigned long long>(s.checks.serve_path_llm_calls)));
}

void staleness_criterion() {
  std::vector<std::future<MetricsReport>> runs;
  for (int seed = 1; seed <= kStalenessSeeds; ++seed) {
    runs.push_back(std::async(std::launch::async, [seed] {
      SimConfig c = default_config();
      c.seed = static_cast<std::uint64_t>(seed);
      return run(c);
    }));
  }
  std::uint64_t violations = 0;
  int over_bound = 0;
  double worst_margin = INFINITY;
  for (auto& f : runs) {
    const MetricsReport r = f.get();
    violations += r.checks.staleness_violations;
    const double margin = r.checks.staleness_bound_ms - static_cast<double>(r.staleness.max_ms);
    if (margin < 0) ++over_bound;
    worst_margin = std::min(worst_margin, margin);
  }
  verdict(5, violations == 0 && over_bound == 0,
          "staleness max age <= update period + max propagation delay over 20 seeds",
          fmt("%llu violating hits, %d seeds over bound, tightest margin %.1f ms",
              static_cast<unsigned long long>(violations), over_bound, worst_margin));
}

Embedding axis(std::size_t i) {
  Embedding::Components c{};
  c[i] = 1.0;
  return Embedding::from_unit(c);
}

void cache_criterion() {
  testing::Gen gen(77);
  std::vector<Embedding> pool;
  for (const char* t : {"blue widget price", "blue widgets price", "red widget price", "refund policy",
                        "refund policies", "shipping time", "le prix", "ab", "价格是多少"}) {
    pool.push_back(embed(t));
  }
  for (std::size_t i = 0; i < 4; ++i) pool.push_back(axis(i));

  int mismatched = 0;
  std::uint64_t ops_total = 0;
  for (int seq = 0; seq < kCacheSequences; ++seq) {
    const CacheConfig config{1 + gen.below(6), gen.chance(0.5) ? 0.85 : gen.unit()};
    SemanticCache<int> cache(config);
    testing::CacheOracle<int> oracle(config);
    TimeMs now = 0;
    bool same = true;
    const int ops = 1 + static_cast<int>(gen.below(60));
    for (int op = 0; op < ops && same; ++op, ++ops_total) {
      now += static_cast<TimeMs>(gen.below(40));
      switch (gen.below(4)) {
        case 0:
        case 1: {
          CacheEntry<int> e{QueryKey{gen.below(10)}, pool[gen.below(pool.size())], op,
                            1 + gen.below(4), 0, gen.chance(0.3) ? static_cast<TimeMs>(gen.below(100)) : 0};
          const auto a = cache.put(e, now);
          const auto b = oracle.put(e, now);
          same = a.stored == b.stored && a.evicted == b.evicted;
          break;
        }
        case 2: {
          const Embedding& probe = pool[gen.below(pool.size())];
          const auto a = cache.lookup(probe, now);
          const auto b = oracle.lookup(probe, now);
          same = a.has_value() == b.has_value() &&
                 (!a || (a->entry.key == b->entry.key && a->entry.payload == b->entry.payload &&
                         a->similarity == b->similarity));
          break;
        }
        default:
          same = cache.expire(now) == oracle.expire(now);
          break;
      }
      same = same && cache.recency_order() == oracle.recency_order();
    }
    if (!same) ++mismatched;
  }
  verdict(6, mismatched == 0, "1,000 fuzzed put/lookup sequences match the linear-scan reference",
          fmt("%d of %d sequences differ, %llu operations", mismatched, kCacheSequences,
              static_cast<unsigned long long>(ops_total)));
}

void pii_criterion() {
  testing::Gen gen(31337);
  EdgeNode edge;
  int detections = 0, cards_left = 0, rejected = 0, cards = 0;
  for (int i = 0; i < kPiiQueries; ++i) {
    // Adversarial text plus at least one standalone, Luhn-valid card.
    std::vector<std::string> injected;
    std::string text = gen.text();
    const int n = 1 + static_cast<int>(gen.below(2));
    for (int k = 0; k < n; ++k) {
      injected.push_back(gen.card());
      text += " ref " + injected.back() + " ok " + (gen.chance(0.5) ? gen.email() : gen.phone()) + " ";
    }
    text += gen.text();
    cards += n;

    // Copilot side: detect, redact, and serialize the edge request.
    const Redaction r = redact(text, detect_pii(text));
    const std::string payload =
        json(QueryRequest{"u1", "s1", r.text, std::nullopt}).dump(-1, ' ', false, json::error_handler_t::replace);
    const auto sent = json::parse(payload).get<QueryRequest>();
    if (!detect_pii(sent.query_text).empty()) ++detections;
    for (const std::string& card : injected) {
      std::string digits;
      for (char ch : card) {
        if (ch >= '0' && ch <= '9') digits.push_back(ch);
      }
      if (payload.find(card) != std::string::npos || payload.find(digits) != std::string::npos) ++cards_left;
    }
    try {
      edge.serve_query(sent, i);
    } catch (const PiiRejected&) {
      ++rejected;
    }
  }
  verdict(7, detections == 0 && cards_left == 0 && rejected == 0,
          "1,000 fuzzed PII queries: no identifiers reach the edge, every Luhn-valid card redacted",
          fmt("%d payload detections, %d of %d cards left, %d edge rejections", detections, cards_left, cards,
              rejected));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(JUNGLEKIT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism_criterion() {
  const fs::path dir = fs::temp_directory_path() / ("junglekit_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string a = (dir / "a.json").string(), b = (dir / "b.json").string();
  const std::string base = "sim run --config " + kSource + "/configs/default.json --seed 42 --format json --out ";
  const int ea = run_cli(base + a);
  const int eb = run_cli(base + b);
  const std::string ja = slurp(a), jb = slurp(b);
  fs::remove_all(dir);
  verdict(8, ea == 0 && eb == 0 && !ja.empty() && ja == jb,
          "two sim run invocations with the same config and seed give byte-identical JSON",
          fmt("exit %d / %d, %zu / %zu bytes, %s", ea, eb, ja.size(), jb.size(), ja == jb ? "identical" : "differ"));
}

void push_failure_criterion() {
  SimConfig c = default_config();
  c.push_failure_rate = kPushFailureRate;
  const MetricsReport r = run(c);
  const bool answered = r.pending_misses_final == 0 && r.counts.misses_answered == r.counts.misses_enqueued;
  const bool ok = answered && r.checks.version_regressions == 0 && r.checks.conservation_violations == 0 &&
                  r.counts.push_failures > 0;
  verdict(9, ok, "20% push failures: every miss answered, each (key, version) applied at most once, conservation",
          fmt("%llu push failures, %llu/%llu misses answered, %llu pending, %llu repeat applies, "
              "%llu conservation violations",
              static_cast<unsigned long long>(r.counts.push_failures),
              static_cast<unsigned long long>(r.counts.misses_answered),
              static_cast<unsigned long long>(r.counts.misses_enqueued),
              static_cast<unsigned long long>(r.pending_misses_final),
              static_cast<unsigned long long>(r.checks.version_regressions),
              static_cast<unsigned long long>(r.checks.conservation_violations)));
}

}  // namespace

int main() {
  try {
    const TimedRun base = default_run();
    cost_criterion(base);
    budget_criterion();
    latency_criterion(base.report);
    latency_scale_criterion();
    staleness_criterion();
    cache_criterion();
    pii_criterion();
    determinism_criterion();
    push_failure_criterion();
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s  %d criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
  return failures == 0 ? 0 : 1;
}
