#pragma once

// JSON encodings shared by the HTTP protocol, the snapshot log, the action
// log and the config/registry/pricing files. Field names follow the domain
// types; QueryKey is 16 lowercase hex digits; timestamps are integer ms.

#include <fstream>
#include <sstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "junglekit/core.hpp"
#include "junglekit/cost_model.hpp"
#include "junglekit/edge_types.hpp"
#include "junglekit/llm_ensemble.hpp"
#include "junglekit/semantic_cache.hpp"

namespace junglekit {

using json = nlohmann::json;

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void to_json(json& j, LanguageTag tag) { j = std::string(to_string(tag)); }
inline void from_json(const json& j, LanguageTag& tag) {
  auto parsed = parse_language(j.get<std::string>());
  if (!parsed) throw WireError("unknown language tag '" + j.get<std::string>() + "'");
  tag = *parsed;
}

inline void to_json(json& j, const QueryKey& k) { j = k.to_hex(); }
inline void from_json(const json& j, QueryKey& k) {
  auto parsed = QueryKey::from_hex(j.get<std::string>());
  if (!parsed) throw WireError("query key must be 16 lowercase hex digits");
  k = *parsed;
}

inline void to_json(json& j, const Embedding& e) { j = e.dims(); }
inline void from_json(const json& j, Embedding& e) {
  if (!j.is_array() || j.size() != kEmbeddingDims) {
    throw WireError("embedding must be an array of " + std::to_string(kEmbeddingDims) + " numbers");
  }
  Embedding::Components dims{};
  for (std::size_t i = 0; i < kEmbeddingDims; ++i) dims[i] = j[i].get<double>();
  try {
    e = Embedding::from_unit(dims);
  } catch (const ContractViolation& ex) {
    throw WireError(ex.what());
  }
}

namespace detail {

template <typename T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  return j.at(field).get<T>();
}

}  // namespace detail

inline void to_json(json& j, const Snapshot& s) {
  j = json{{"user_id", s.user_id},         {"key", s.key},
           {"answer_text", s.answer_text}, {"language", s.language},
           {"model_id", s.model_id},       {"embedding", s.embedding},
           {"version", s.version},         {"generated_at", s.generated_at}};
}
inline void from_json(const json& j, Snapshot& s) {
  j.at("user_id").get_to(s.user_id);
  j.at("key").get_to(s.key);
  j.at("answer_text").get_to(s.answer_text);
  j.at("language").get_to(s.language);
  j.at("model_id").get_to(s.model_id);
  j.at("embedding").get_to(s.embedding);
  j.at("version").get_to(s.version);
  j.at("generated_at").get_to(s.generated_at);
}

inline void to_json(json& j, const QueryRequest& r) {
  j = json{{"user_id", r.user_id},
           {"session_id", r.session_id},
           {"query_text", r.query_text},
           {"language_hint", detail::optional_to_json(r.language_hint)}};
}
inline void from_json(const json& j, QueryRequest& r) {
  j.at("user_id").get_to(r.user_id);
  j.at("session_id").get_to(r.session_id);
  j.at("query_text").get_to(r.query_text);
  r.language_hint = detail::optional_from_json<LanguageTag>(j, "language_hint");
}

inline void to_json(json& j, const QueryResponse& r) {
  j = json{{"status", std::string(to_string(r.status))},
           {"snapshot", detail::optional_to_json(r.snapshot)},
           {"similarity", detail::optional_to_json(r.similarity)},
           {"age_ms", detail::optional_to_json(r.age_ms)}};
}
inline void from_json(const json& j, QueryResponse& r) {
  const auto status = j.at("status").get<std::string>();
  if (status == "hit") {
    r.status = QueryStatus::hit;
  } else if (status == "miss_enqueued") {
    r.status = QueryStatus::miss_enqueued;
  } else {
    throw WireError("unknown query status '" + status + "'");
  }
  r.snapshot = detail::optional_from_json<Snapshot>(j, "snapshot");
  r.similarity = detail::optional_from_json<double>(j, "similarity");
  r.age_ms = detail::optional_from_json<TimeMs>(j, "age_ms");
}

inline void to_json(json& j, const MissRecord& m) {
  j = json{{"user_id", m.user_id},
           {"key", m.key},
           {"query_text", m.query_text},
           {"language_hint", detail::optional_to_json(m.language_hint)},
           {"enqueued_at", m.enqueued_at}};
}
inline void from_json(const json& j, MissRecord& m) {
  j.at("user_id").get_to(m.user_id);
  j.at("key").get_to(m.key);
  j.at("query_text").get_to(m.query_text);
  m.language_hint = detail::optional_from_json<LanguageTag>(j, "language_hint");
  j.at("enqueued_at").get_to(m.enqueued_at);
}

inline void to_json(json& j, const CostRecord& r) {
  j = json{{"model_id", r.model_id},
           {"input_tokens", r.input_tokens},
           {"output_tokens", r.output_tokens},
           {"occurred_at", r.occurred_at}};
}
inline void from_json(const json& j, CostRecord& r) {
  j.at("model_id").get_to(r.model_id);
  j.at("input_tokens").get_to(r.input_tokens);
  j.at("output_tokens").get_to(r.output_tokens);
  j.at("occurred_at").get_to(r.occurred_at);
}

inline void to_json(json& j, const LatencySpec& l) {
  j = json{{"median", l.median_ms}, {"sigma", l.sigma}};
}
inline void from_json(const json& j, LatencySpec& l) {
  j.at("median").get_to(l.median_ms);
  j.at("sigma").get_to(l.sigma);
}

inline void to_json(json& j, const ModelSpec& m) {
  j = json{{"model_id", m.model_id},   {"language", m.language},
           {"price_in", m.price_in},   {"price_out", m.price_out},
           {"sim_latency_ms", m.sim_latency_ms}};
}
inline void from_json(const json& j, ModelSpec& m) {
  j.at("model_id").get_to(m.model_id);
  j.at("language").get_to(m.language);
  j.at("price_in").get_to(m.price_in);
  j.at("price_out").get_to(m.price_out);
  j.at("sim_latency_ms").get_to(m.sim_latency_ms);
}

inline void to_json(json& j, const RerankWeights& w) {
  j = json{{"w_lang", w.w_lang}, {"w_sim", w.w_sim}, {"w_len", w.w_len}, {"prior", json::object()}};
  for (const auto& [id, p] : w.prior) j["prior"][id] = p;
}
inline void from_json(const json& j, RerankWeights& w) {
  w = RerankWeights{};
  if (j.contains("w_lang")) j.at("w_lang").get_to(w.w_lang);
  if (j.contains("w_sim")) j.at("w_sim").get_to(w.w_sim);
  if (j.contains("w_len")) j.at("w_len").get_to(w.w_len);
  if (j.contains("prior")) {
    for (const auto& [id, p] : j.at("prior").items()) w.prior[id] = p.get<double>();
  }
}

inline void to_json(json& j, const PricingTable& t) {
  j = json{{"models", json::object()}, {"monolithic_blended", t.monolithic_blended().units()}};
  for (const auto& [id, p] : t.models()) {
    j["models"][id] = json{{"price_in", p.in.units()}, {"price_out", p.out.units()}};
  }
}
inline void from_json(const json& j, PricingTable& t) {
  t = PricingTable{};
  if (j.contains("monolithic_blended")) {
    t.set_monolithic_blended(Price::from_units(j.at("monolithic_blended").get<double>()));
  }
  for (const auto& [id, p] : j.at("models").items()) {
    t.set(id, ModelPrice{Price::from_units(p.at("price_in").get<double>()),
                         Price::from_units(p.at("price_out").get<double>())});
  }
}

inline void to_json(json& j, const CacheConfig& c) {
  j = json{{"capacity", c.capacity}, {"similarity_threshold", c.similarity_threshold}};
}
inline void from_json(const json& j, CacheConfig& c) {
  c = CacheConfig{};
  if (j.contains("capacity")) j.at("capacity").get_to(c.capacity);
  if (j.contains("similarity_threshold")) j.at("similarity_threshold").get_to(c.similarity_threshold);
}

/// Walks one JSON object, rejecting unknown keys and type mismatches with the
/// dotted path of the offending field.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      j_.at(key).get_to(out);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  template <typename F>
  void with(const char* key, F&& f) {
    seen_.insert(key);
    if (j_.contains(key)) f(j_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown field " + field(key));
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Reads a whole file; ConfigError when it cannot be opened.
inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Registry document: a JSON array of model records. Fails naming the first
/// bad record.
inline ModelRegistry registry_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("registry must be a JSON array of model records");
  std::vector<ModelSpec> models;
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      models.push_back(j[i].get<ModelSpec>());
    } catch (const std::exception& e) {
      throw ConfigError("registry record " + std::to_string(i) + ": " + e.what());
    }
  }
  return ModelRegistry(std::move(models));
}

inline ModelRegistry load_registry(const std::string& path) {
  return registry_from_json(parse_json_file(path));
}

inline PricingTable pricing_from_json(const json& j) {
  try {
    return j.get<PricingTable>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("pricing: ") + e.what());
  }
}

inline PricingTable load_pricing(const std::string& path) {
  return pricing_from_json(parse_json_file(path));
}

inline void to_json(json& j, const ServedVolume& v) {
  j = json{{"input_tokens", v.input_tokens}, {"output_tokens", v.output_tokens}};
}
inline void from_json(const json& j, ServedVolume& v) {
  j.at("input_tokens").get_to(v.input_tokens);
  j.at("output_tokens").get_to(v.output_tokens);
}

/// Ledger file: {"records": [CostRecord...], "served": ServedVolume}. The
/// served volume is what the monolithic baseline is priced on.
struct LedgerFile {
  Ledger ledger;
  std::optional<ServedVolume> served;
};

inline json ledger_to_json(const Ledger& ledger, const std::optional<ServedVolume>& served) {
  json records = json::array();
  for (const CostRecord& r : ledger.records()) records.push_back(r);
  return json{{"records", records}, {"served", detail::optional_to_json(served)}};
}

inline LedgerFile ledger_from_json(const json& j) {
  LedgerFile f;
  try {
    if (!j.is_object() || !j.contains("records") || !j.at("records").is_array()) {
      throw WireError("expected an object with a \"records\" array");
    }
    for (const json& r : j.at("records")) f.ledger.append(r.get<CostRecord>());
    f.served = detail::optional_from_json<ServedVolume>(j, "served");
  } catch (const std::exception& e) {
    throw ConfigError(std::string("ledger: ") + e.what());
  }
  return f;
}

inline LedgerFile load_ledger(const std::string& path) { return ledger_from_json(parse_json_file(path)); }

}  // namespace junglekit
