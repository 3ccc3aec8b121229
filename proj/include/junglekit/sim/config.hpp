#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "junglekit/cost_model.hpp"
#include "junglekit/edge_node.hpp"
#include "junglekit/llm_ensemble.hpp"
#include "junglekit/updater.hpp"
#include "junglekit/wire.hpp"

namespace junglekit::sim {

/// Lognormal leg: median in ms, sigma of the underlying normal.
struct LegLatency {
  double median_ms = 40.0;
  double sigma = 0.5;

  friend bool operator==(const LegLatency&, const LegLatency&) = default;
};

struct Region {
  std::string name;
  double user_weight = 1.0;
  LegLatency user_edge_latency{40.0, 0.5};
  LegLatency edge_backend_latency{120.0, 0.4};
  LegLatency user_backend_latency{250.0, 0.5};  // data-refresh writes

  friend bool operator==(const Region&, const Region&) = default;
};

/// Query length in tokens: Pareto(alpha, min_tokens), capped at max_tokens.
struct DataSizeDistribution {
  double alpha = 1.2;
  double min_tokens = 16.0;
  double max_tokens = 2048.0;

  friend bool operator==(const DataSizeDistribution&, const DataSizeDistribution&) = default;
};

struct SimConfig {
  std::uint64_t seed = 42;
  TimeMs duration_ms = 3'600'000;
  std::uint64_t query_count = 10'000;
  std::uint64_t user_count = 400;
  std::vector<Region> regions = default_regions();
  double read_write_ratio = 50.0;
  double smb_fraction = 0.98;
  DataSizeDistribution data_size_distribution;
  std::map<LanguageTag, double> languages = default_languages();
  UpdaterConfig updater;
  CacheConfig cache;
  ModelRegistry registry = ModelRegistry::defaults();
  PricingTable pricing = ModelRegistry::defaults().pricing();
  double llm_latency_scale = 1.0;
  double push_failure_rate = 0.0;
  double pii_injection_rate = 0.02;
  double edge_processing_ms = 2.0;

  static std::vector<Region> default_regions() {
    return {
        {"na", 0.40, {40.0, 0.5}, {120.0, 0.4}, {250.0, 0.5}},
        {"eu", 0.30, {40.0, 0.5}, {120.0, 0.4}, {250.0, 0.5}},
        {"apac", 0.20, {40.0, 0.5}, {120.0, 0.4}, {250.0, 0.5}},
        {"latam", 0.10, {40.0, 0.5}, {120.0, 0.4}, {250.0, 0.5}},
    };
  }

  static std::map<LanguageTag, double> default_languages() {
    return {{LanguageTag::en, 0.70}, {LanguageTag::fr, 0.06}, {LanguageTag::hi, 0.06},
            {LanguageTag::th, 0.06}, {LanguageTag::zh, 0.06}, {LanguageTag::ta, 0.06}};
  }

  void validate() const {
    auto positive_sum = [](auto begin, auto end, auto weight, const char* what) {
      double total = 0.0;
      for (auto it = begin; it != end; ++it) {
        const double w = weight(*it);
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(std::string(what) + " weights must be non-negative");
        total += w;
      }
      if (!(total > 0.0)) throw ConfigError(std::string(what) + " weights need a positive sum");
    };
    auto leg = [](const LegLatency& l, const std::string& where) {
      if (!(l.median_ms > 0.0) || !(l.sigma >= 0.0) || !std::isfinite(l.median_ms) || !std::isfinite(l.sigma)) {
        throw ConfigError(where + " needs median_ms > 0 and sigma >= 0");
      }
    };
    auto rate = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
    };

    if (duration_ms < 0) throw ConfigError("duration_ms must be >= 0");
    if (regions.empty()) throw ConfigError("regions must not be empty");
    std::set<std::string> names;
    for (const Region& r : regions) {
      if (r.name.empty()) throw ConfigError("region name must not be empty");
      if (!names.insert(r.name).second) throw ConfigError("duplicate region '" + r.name + "'");
      leg(r.user_edge_latency, "region '" + r.name + "' user_edge_latency");
      leg(r.edge_backend_latency, "region '" + r.name + "' edge_backend_latency");
      leg(r.user_backend_latency, "region '" + r.name + "' user_backend_latency");
    }
    positive_sum(regions.begin(), regions.end(), [](const Region& r) { return r.user_weight; }, "region user");
    positive_sum(languages.begin(), languages.end(), [](const auto& kv) { return kv.second; }, "language");
    if (languages.contains(LanguageTag::other)) {
      throw ConfigError("languages: 'other' is not a user language");
    }
    if (!(read_write_ratio > 0.0) || !std::isfinite(read_write_ratio)) {
      throw ConfigError("read_write_ratio must be > 0");
    }
    rate(smb_fraction, "smb_fraction");
    rate(push_failure_rate, "push_failure_rate");
    rate(pii_injection_rate, "pii_injection_rate");
    if (push_failure_rate >= 1.0) throw ConfigError("push_failure_rate must be < 1");
    const auto& d = data_size_distribution;
    if (!(d.alpha > 0.0) || !(d.min_tokens >= 1.0) || !(d.max_tokens >= d.min_tokens)) {
      throw ConfigError("data_size_distribution needs alpha > 0 and 1 <= min_tokens <= max_tokens");
    }
    if (user_count < 1) throw ConfigError("user_count must be >= 1");
    if (!(llm_latency_scale > 0.0) || !std::isfinite(llm_latency_scale)) {
      throw ConfigError("llm_latency_scale must be > 0");
    }
    if (!(edge_processing_ms >= 0.0)) throw ConfigError("edge_processing_ms must be >= 0");
    updater.validate();
    cache.validate();
    for (const ModelSpec& m : registry.models()) {
      try {
        pricing.price_of(m.model_id);
      } catch (const PricingError& e) {
        throw ConfigError(std::string("pricing: ") + e.what());
      }
    }
  }
};

namespace detail {

inline LegLatency leg_from_json(const json& j, const std::string& path) {
  LegLatency l;
  ObjectReader r(j, path);
  r.get("median_ms", l.median_ms);
  r.get("sigma", l.sigma);
  r.finish();
  return l;
}

inline json leg_to_json(const LegLatency& l) { return json{{"median_ms", l.median_ms}, {"sigma", l.sigma}}; }

}  // namespace detail

inline SimConfig config_from_json(const json& j) {
  SimConfig c;
  ObjectReader r(j, "");
  r.get("seed", c.seed);
  r.get("duration_ms", c.duration_ms);
  r.get("query_count", c.query_count);
  r.get("user_count", c.user_count);
  r.with("regions", [&c](const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + " must be an array");
    c.regions.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      Region region;
      ObjectReader rr(v[i], p);
      rr.get("name", region.name);
      rr.get("user_weight", region.user_weight);
      rr.with("user_edge_latency", [&](const json& l, const std::string& lp) {
        region.user_edge_latency = detail::leg_from_json(l, lp);
      });
      rr.with("edge_backend_latency", [&](const json& l, const std::string& lp) {
        region.edge_backend_latency = detail::leg_from_json(l, lp);
      });
      rr.with("user_backend_latency", [&](const json& l, const std::string& lp) {
        region.user_backend_latency = detail::leg_from_json(l, lp);
      });
      rr.finish();
      c.regions.push_back(std::move(region));
    }
  });
  r.get("read_write_ratio", c.read_write_ratio);
  r.get("smb_fraction", c.smb_fraction);
  r.with("data_size_distribution", [&c](const json& v, const std::string& path) {
    ObjectReader d(v, path);
    d.get("alpha", c.data_size_distribution.alpha);
    d.get("min_tokens", c.data_size_distribution.min_tokens);
    d.get("max_tokens", c.data_size_distribution.max_tokens);
    d.finish();
  });
  r.with("languages", [&c](const json& v, const std::string& path) {
    if (!v.is_object()) throw ConfigError(path + " must be an object");
    c.languages.clear();
    for (const auto& [code, weight] : v.items()) {
      const auto tag = parse_language(code);
      if (!tag) throw ConfigError(path + ": unknown language '" + code + "'");
      if (!weight.is_number()) throw ConfigError(path + "." + code + " must be a number");
      c.languages[*tag] = weight.get<double>();
    }
  });
  r.with("updater", [&c](const json& v, const std::string& path) {
    ObjectReader u(v, path);
    u.get("update_period_ms", c.updater.update_period_ms);
    u.get("batch_max", c.updater.batch_max);
    u.get("lease_ms", c.updater.lease_ms);
    u.finish();
  });
  r.with("cache", [&c](const json& v, const std::string& path) {
    ObjectReader cr(v, path);
    cr.get("capacity", c.cache.capacity);
    cr.get("similarity_threshold", c.cache.similarity_threshold);
    cr.finish();
  });
  r.with("registry", [&c](const json& v, const std::string&) {
    c.registry = registry_from_json(v);
    c.pricing = c.registry.pricing();
  });
  r.with("pricing", [&c](const json& v, const std::string& path) {
    ObjectReader pr(v, path);
    pr.with("models", [](const json&, const std::string&) {});
    pr.with("monolithic_blended", [](const json&, const std::string&) {});
    pr.finish();
    c.pricing = pricing_from_json(v);
  });
  r.get("llm_latency_scale", c.llm_latency_scale);
  r.get("push_failure_rate", c.push_failure_rate);
  r.get("pii_injection_rate", c.pii_injection_rate);
  r.get("edge_processing_ms", c.edge_processing_ms);
  r.finish();
  c.validate();
  return c;
}

inline SimConfig load_config(const std::string& path) { return config_from_json(parse_json_file(path)); }

inline json config_to_json(const SimConfig& c) {
  json regions = json::array();
  for (const Region& r : c.regions) {
    regions.push_back(json{{"name", r.name},
                           {"user_weight", r.user_weight},
                           {"user_edge_latency", detail::leg_to_json(r.user_edge_latency)},
                           {"edge_backend_latency", detail::leg_to_json(r.edge_backend_latency)},
                           {"user_backend_latency", detail::leg_to_json(r.user_backend_latency)}});
  }
  json languages = json::object();
  for (const auto& [tag, w] : c.languages) languages[std::string(to_string(tag))] = w;
  return json{{"seed", c.seed},
              {"duration_ms", c.duration_ms},
              {"query_count", c.query_count},
              {"user_count", c.user_count},
              {"regions", regions},
              {"read_write_ratio", c.read_write_ratio},
              {"smb_fraction", c.smb_fraction},
              {"data_size_distribution",
               {{"alpha", c.data_size_distribution.alpha},
                {"min_tokens", c.data_size_distribution.min_tokens},
                {"max_tokens", c.data_size_distribution.max_tokens}}},
              {"languages", languages},
              {"updater",
               {{"update_period_ms", c.updater.update_period_ms},
                {"batch_max", c.updater.batch_max},
                {"lease_ms", c.updater.lease_ms}}},
              {"cache", c.cache},
              {"registry", c.registry.models()},
              {"pricing", c.pricing},
              {"llm_latency_scale", c.llm_latency_scale},
              {"push_failure_rate", c.push_failure_rate},
              {"pii_injection_rate", c.pii_injection_rate},
              {"edge_processing_ms", c.edge_processing_ms}};
}

}  // namespace junglekit::sim
