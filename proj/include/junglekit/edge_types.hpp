#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "junglekit/core/embedding.hpp"
#include "junglekit/core/language.hpp"
#include "junglekit/core/query_key.hpp"
#include "junglekit/core/text.hpp"

namespace junglekit {

/// A versioned cached answer for one (user, query key).
struct Snapshot {
  std::string user_id;
  QueryKey key;
  std::string answer_text;
  LanguageTag language = LanguageTag::other;
  std::string model_id;
  Embedding embedding;
  std::uint64_t version = 0;
  TimeMs generated_at = 0;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// Copilot -> edge. query_text is already redacted.
struct QueryRequest {
  std::string user_id;
  std::string session_id;
  std::string query_text;
  std::optional<LanguageTag> language_hint;

  friend bool operator==(const QueryRequest&, const QueryRequest&) = default;
};

enum class QueryStatus { hit, miss_enqueued };

inline constexpr std::string_view to_string(QueryStatus s) noexcept {
  return s == QueryStatus::hit ? "hit" : "miss_enqueued";
}

struct QueryResponse {
  QueryStatus status = QueryStatus::miss_enqueued;
  std::optional<Snapshot> snapshot;
  std::optional<double> similarity;
  std::optional<TimeMs> age_ms;

  friend bool operator==(const QueryResponse&, const QueryResponse&) = default;
};

/// A query the edge could not answer, waiting for the backend.
struct MissRecord {
  std::string user_id;
  QueryKey key;
  std::string query_text;
  std::optional<LanguageTag> language_hint;
  TimeMs enqueued_at = 0;

  friend bool operator==(const MissRecord&, const MissRecord&) = default;
};

enum class ApplyResult { applied, stale_ignored };

inline constexpr std::string_view to_string(ApplyResult r) noexcept {
  return r == ApplyResult::applied ? "applied" : "stale_ignored";
}

}  // namespace junglekit
