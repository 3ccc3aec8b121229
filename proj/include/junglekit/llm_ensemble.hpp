#pragma once

// The backend answer pipeline: detect language, route to the small models for
// that language group, generate candidates, rerank, emit a snapshot plus the
// cost records the work incurred.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "junglekit/core.hpp"
#include "junglekit/cost_model.hpp"
#include "junglekit/edge_types.hpp"

namespace junglekit {

namespace instrumentation {

/// Bumped by every mock model invocation on the calling thread. The edge node
/// samples it around serve_query to prove the read path never reaches a model.
inline thread_local std::uint64_t llm_calls = 0;

}  // namespace instrumentation

struct LatencySpec {
  double median_ms = 600.0;
  double sigma = 0.4;

  friend bool operator==(const LatencySpec&, const LatencySpec&) = default;
};

struct ModelSpec {
  std::string model_id;
  LanguageTag language = LanguageTag::other;
  double price_in = 0.30;   // per 1M input tokens
  double price_out = 0.30;  // per 1M output tokens
  LatencySpec sim_latency_ms;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Validated set of models with exactly one default (language `other`).
class ModelRegistry {
 public:
  explicit ModelRegistry(std::vector<ModelSpec> models) : models_(std::move(models)) {
    std::set<std::string, std::less<>> seen;
    std::optional<std::size_t> default_index;
    for (std::size_t i = 0; i < models_.size(); ++i) {
      const ModelSpec& m = models_[i];
      auto fail = [&](const std::string& why) {
        throw ConfigError("registry record " + std::to_string(i) + " (model_id '" + m.model_id +
                          "'): " + why);
      };
      if (m.model_id.empty()) fail("empty model_id");
      if (m.model_id == kRerankerModelId) fail("model_id is reserved");
      if (!seen.insert(m.model_id).second) fail("duplicate model_id");
      if (!(m.price_in >= 0.0) || !(m.price_out >= 0.0)) fail("prices must be non-negative");
      if (!(m.sim_latency_ms.median_ms > 0.0) || !(m.sim_latency_ms.sigma >= 0.0)) {
        fail("sim_latency_ms needs median_ms > 0 and sigma >= 0");
      }
      if (m.language == LanguageTag::other) {
        if (default_index) fail("second default model (language 'other')");
        default_index = i;
      }
    }
    if (!default_index) throw ConfigError("registry has no default model (language 'other')");
    default_index_ = *default_index;
    std::sort(models_.begin(), models_.end(),
              [](const ModelSpec& a, const ModelSpec& b) { return a.model_id < b.model_id; });
    for (std::size_t i = 0; i < models_.size(); ++i) {
      if (models_[i].language == LanguageTag::other) default_index_ = i;
    }
  }

  /// One small model per non-English language group plus a general default.
  static ModelRegistry defaults() {
    return ModelRegistry({
        {"default-small", LanguageTag::other, 0.30, 0.30, {800.0, 0.5}},
        {"fr-small", LanguageTag::fr, 0.30, 0.30, {600.0, 0.4}},
        {"hi-small", LanguageTag::hi, 0.30, 0.30, {600.0, 0.4}},
        {"ta-small", LanguageTag::ta, 0.30, 0.30, {600.0, 0.4}},
        {"th-small", LanguageTag::th, 0.30, 0.30, {600.0, 0.4}},
        {"zh-small", LanguageTag::zh, 0.30, 0.30, {600.0, 0.4}},
    });
  }

  const std::vector<ModelSpec>& models() const noexcept { return models_; }
  const ModelSpec& default_model() const noexcept { return models_[default_index_]; }

  const ModelSpec* find(std::string_view model_id) const noexcept {
    for (const ModelSpec& m : models_) {
      if (m.model_id == model_id) return &m;
    }
    return nullptr;
  }

  /// Prices taken from the model specs, with the default reranker and
  /// monolithic rates.
  PricingTable pricing() const {
    PricingTable t;
    for (const ModelSpec& m : models_) {
      t.set(m.model_id, ModelPrice{Price::from_units(m.price_in), Price::from_units(m.price_out)});
    }
    t.set(std::string(kRerankerModelId),
          ModelPrice{PricingTable::kDefaultReranker, PricingTable::kDefaultReranker});
    return t;
  }

 private:
  std::vector<ModelSpec> models_;  // sorted by model_id
  std::size_t default_index_ = 0;
};

/// Models for `lang` plus the default, ordered by model_id. Never empty.
inline std::vector<ModelSpec> route(const ModelRegistry& registry, LanguageTag lang) {
  std::vector<ModelSpec> out;
  for (const ModelSpec& m : registry.models()) {
    if (m.language == lang || m.language == LanguageTag::other) out.push_back(m);
  }
  return out;
}

struct Candidate {
  std::string model_id;
  std::string text;
  LanguageTag language = LanguageTag::other;
  std::uint64_t output_tokens = 0;
  Embedding embedding;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

inline constexpr std::size_t kEchoCodePoints = 64;
inline constexpr std::uint64_t kMaxOutputTokens = 256;

/// Deterministic stand-in for model inference.
inline Candidate generate(const ModelSpec& model, std::string_view prompt) {
  if (prompt.empty()) throw ContractViolation("generate: empty prompt");
  ++instrumentation::llm_calls;
  const std::u32string cps = unicode::decode_utf8(normalize_text(prompt));
  const std::size_t keep = std::min(cps.size(), kEchoCodePoints);
  Candidate c;
  c.model_id = model.model_id;
  c.text = "[" + model.model_id + "] " + unicode::encode_utf8(std::u32string_view(cps).substr(0, keep));
  c.language = model.language;
  c.output_tokens = std::min(kMaxOutputTokens, 2 * count_tokens(prompt));
  c.embedding = embed(c.text);
  return c;
}

/// Linear reranker weights for one language group.
struct RerankWeights {
  double w_lang = 1.0;
  double w_sim = 0.5;
  double w_len = -0.001;  // per output token beyond 256
  std::map<std::string, double, std::less<>> prior;

  friend bool operator==(const RerankWeights&, const RerankWeights&) = default;
};

using WeightsByLanguage = std::map<LanguageTag, RerankWeights>;

inline const RerankWeights& weights_for(const WeightsByLanguage& by_lang, LanguageTag lang) {
  static const RerankWeights kDefault{};
  auto it = by_lang.find(lang);
  return it == by_lang.end() ? kDefault : it->second;
}

inline double rerank_score(const Candidate& c, const Embedding& query, LanguageTag query_lang,
                           const RerankWeights& w) {
  double score = w.w_lang * (c.language == query_lang ? 1.0 : 0.0) +
                 w.w_sim * cosine(c.embedding, query);
  if (c.output_tokens > kMaxOutputTokens) {
    score += w.w_len * static_cast<double>(c.output_tokens - kMaxOutputTokens);
  }
  if (auto it = w.prior.find(c.model_id); it != w.prior.end()) score += it->second;
  return score;
}

/// Highest score first; equal scores order by model_id.
inline std::vector<Candidate> rerank(std::vector<Candidate> candidates, const Embedding& query,
                                     LanguageTag query_lang, const RerankWeights& weights) {
  if (candidates.empty()) throw ContractViolation("rerank: no candidates");
  std::vector<std::pair<double, Candidate>> scored;
  scored.reserve(candidates.size());
  for (Candidate& c : candidates) {
    const double s = rerank_score(c, query, query_lang, weights);
    scored.emplace_back(s, std::move(c));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second.model_id < b.second.model_id;
  });
  std::vector<Candidate> out;
  out.reserve(scored.size());
  for (auto& [s, c] : scored) out.push_back(std::move(c));
  return out;
}

struct Answer {
  Snapshot snapshot;
  std::vector<CostRecord> costs;  // one per candidate, then the reranker
  std::vector<Candidate> ranked;
  LanguageTag language = LanguageTag::en;
  ServedVolume served;
};

/// One miss through route -> generate -> rerank.
inline Answer answer(const ModelRegistry& registry, const WeightsByLanguage& weights,
                     const MissRecord& miss, std::uint64_t previous_version, TimeMs now) {
  if (miss.user_id.empty()) throw ContractViolation("answer: miss without user_id");
  if (miss.query_text.empty()) throw ContractViolation("answer: miss without query text");

  Answer a;
  a.language = miss.language_hint.value_or(detect_language(miss.query_text));
  const Embedding query_embedding = embed(miss.query_text);
  const std::uint64_t input_tokens = count_tokens(miss.query_text);

  std::vector<Candidate> candidates;
  std::uint64_t rerank_tokens = 0;
  for (const ModelSpec& m : route(registry, a.language)) {
    candidates.push_back(generate(m, miss.query_text));
    const Candidate& c = candidates.back();
    a.costs.push_back({c.model_id, input_tokens, c.output_tokens, now});
    rerank_tokens += c.output_tokens;
  }
  a.costs.push_back({std::string(kRerankerModelId), 0, rerank_tokens, now});

  a.ranked = rerank(std::move(candidates), query_embedding, a.language, weights_for(weights, a.language));
  const Candidate& winner = a.ranked.front();

  a.snapshot.user_id = miss.user_id;
  a.snapshot.key = miss.key;
  a.snapshot.answer_text = winner.text;
  a.snapshot.language = winner.language;
  a.snapshot.model_id = winner.model_id;
  a.snapshot.embedding = query_embedding;
  a.snapshot.version = previous_version + 1;
  a.snapshot.generated_at = now;
  a.served = ServedVolume{input_tokens, winner.output_tokens};
  return a;
}

/// The LLM node: owns per-(user, key) version assignment, which makes it the
/// single writer for every key it answers.
class LlmNode {
 public:
  explicit LlmNode(ModelRegistry registry, WeightsByLanguage weights = {})
      : registry_(std::move(registry)), weights_(std::move(weights)) {}

  const ModelRegistry& registry() const noexcept { return registry_; }
  const WeightsByLanguage& weights() const noexcept { return weights_; }

  Answer answer(const MissRecord& miss, TimeMs now) {
    std::uint64_t& v = versions_[{miss.user_id, miss.key}];
    Answer a = junglekit::answer(registry_, weights_, miss, v, now);
    v = a.snapshot.version;
    return a;
  }

  /// Same answer under a fresh version and generation time; no inference.
  Snapshot revalidate(const Snapshot& current, TimeMs now) {
    std::uint64_t& v = versions_[{current.user_id, current.key}];
    Snapshot s = current;
    s.version = std::max(v, current.version) + 1;
    s.generated_at = now;
    v = s.version;
    return s;
  }

  std::uint64_t version_of(const std::string& user_id, QueryKey key) const {
    auto it = versions_.find({user_id, key});
    return it == versions_.end() ? 0 : it->second;
  }

 private:
  ModelRegistry registry_;
  WeightsByLanguage weights_;
  std::map<std::pair<std::string, QueryKey>, std::uint64_t> versions_;
};

}  // namespace junglekit
