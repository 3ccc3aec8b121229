#pragma once

// Seeded synthetic workload: a user population spread over regions, each user
// with a handful of recurring questions, and a timeline of queries, session
// starts and data-refresh writes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "junglekit/core.hpp"
#include "junglekit/sim/config.hpp"
#include "junglekit/sim/rng.hpp"

namespace junglekit::sim {

inline constexpr double kEnterpriseActivity = 5.0;  // relative to an SMB seller
inline constexpr TimeMs kSessionGapMs = 30 * 60 * 1000;
inline constexpr std::size_t kMinTopics = 3;
inline constexpr std::size_t kMaxTopics = 10;
inline constexpr std::size_t kParaphrasesPerTopic = 2;
inline constexpr double kParaphraseRate = 0.25;

enum class EventKind { session_start, query, write };

inline constexpr std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::session_start: return "session_start";
    case EventKind::query: return "query";
    case EventKind::write: return "write";
  }
  return "query";
}

struct User {
  std::string id;
  std::size_t region = 0;
  bool enterprise = false;
  LanguageTag language = LanguageTag::en;
  double activity = 1.0;
  std::vector<std::vector<std::string>> topics;  // [topic][0] is the base wording
};

struct WorkloadEvent {
  TimeMs at = 0;
  EventKind kind = EventKind::query;
  std::size_t user = 0;
  std::string session_id;
  std::string text;  // raw query text, before any redaction
};

struct Workload {
  std::vector<User> users;
  std::vector<WorkloadEvent> events;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
};

namespace detail {

inline std::span<const std::string_view> vocabulary(LanguageTag lang) {
  static constexpr std::array<std::string_view, 36> kEn = {
      "the",      "price",    "of",       "shipping", "for",     "my",      "order",   "is",      "what",
      "and",      "how",      "to",       "listing",  "sales",   "review",  "stock",   "inventory", "return",
      "refund",   "ad",       "campaign", "in",       "this",    "week",    "customer", "fees",   "with",
      "a",        "can",      "increase", "seller",   "product", "brand",   "keyword", "ranking", "margin"};
  static constexpr std::array<std::string_view, 32> kFr = {
      "le",      "prix",    "de",       "la",      "livraison", "pour",     "ma",      "commande",
      "est",     "quel",    "et",       "comment", "les",       "ventes",   "avis",    "stock",
      "retour",  "remboursement", "des", "clients", "frais",    "avec",     "une",     "je",
      "peux",    "augmenter", "vendeur", "produit", "marque",   "classement", "cette", "semaine"};
  static constexpr std::array<std::string_view, 16> kHi = {
      "कीमत", "शिपिंग", "ऑर्डर", "बिक्री", "समीक्षा", "स्टॉक", "वापसी", "ग्राहक",
      "शुल्क", "उत्पाद", "ब्रांड", "रैंकिंग", "मेरा", "क्या", "कैसे", "बढ़ाएं"};
  static constexpr std::array<std::string_view, 12> kTa = {
      "விலை", "அனுப்புதல்", "ஆர்டர்", "விற்பனை", "மதிப்புரை", "இருப்பு",
      "திருப்பி", "வாடிக்கையாளர்", "கட்டணம்", "பொருள்", "என்", "எப்படி"};
  static constexpr std::array<std::string_view, 12> kTh = {
      "ราคา", "การจัดส่ง", "คำสั่งซื้อ", "ยอดขาย", "รีวิว", "สต็อก",
      "คืนสินค้า", "ลูกค้า", "ค่าธรรมเนียม", "สินค้า", "แบรนด์", "อย่างไร"};
  static constexpr std::array<std::string_view, 16> kZh = {
      "价格", "运费", "订单", "销量", "评论", "库存", "退货", "退款",
      "客户", "费用", "产品", "品牌", "排名", "如何", "提高", "我的"};
  switch (lang) {
    case LanguageTag::fr: return kFr;
    case LanguageTag::hi: return kHi;
    case LanguageTag::ta: return kTa;
    case LanguageTag::th: return kTh;
    case LanguageTag::zh: return kZh;
    default: return kEn;
  }
}

/// Words from the user's language until the text reaches `tokens` tokens.
inline std::vector<std::string_view> words_for(Rng& rng, LanguageTag lang, std::uint64_t tokens) {
  const auto vocab = vocabulary(lang);
  std::vector<std::string_view> words;
  std::uint64_t bytes = 0;
  while (bytes < 4 * tokens) {
    words.push_back(vocab[rng.below(vocab.size())]);
    bytes += words.back().size() + (words.size() > 1 ? 1 : 0);
  }
  return words;
}

inline std::string join(const std::vector<std::string_view>& words) {
  std::string s;
  for (std::string_view w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

inline std::string digits(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.below(10)));
  return s;
}

/// An identifier a seller might paste into a question.
inline std::string pii_sample(Rng& rng) {
  switch (rng.below(3)) {
    case 0: return "seller" + digits(rng, 3) + "@shop" + digits(rng, 2) + ".com";
    case 1: return "+1 (" + digits(rng, 3) + ") " + digits(rng, 3) + "-" + digits(rng, 4);
    default: {
      std::string d = "4" + digits(rng, 14);
      for (char check = '0'; check <= '9'; ++check) {
        if (luhn_valid(d + check)) {
          d += check;
          break;
        }
      }
      return d.substr(0, 4) + " " + d.substr(4, 4) + " " + d.substr(8, 4) + " " + d.substr(12, 4);
    }
  }
}

inline std::string user_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%05zu", i);
  return buf;
}

}  // namespace detail

inline std::vector<User> generate_users(const SimConfig& config) {
  std::vector<double> region_weights;
  for (const Region& r : config.regions) region_weights.push_back(r.user_weight);
  std::vector<LanguageTag> langs;
  std::vector<double> lang_weights;
  for (const auto& [tag, w] : config.languages) {
    langs.push_back(tag);
    lang_weights.push_back(w);
  }

  const auto& size = config.data_size_distribution;
  std::vector<User> users;
  users.reserve(config.user_count);
  for (std::size_t i = 0; i < config.user_count; ++i) {
    User u;
    u.id = detail::user_id(i);
    Rng rng = Rng::stream(config.seed, "user:" + u.id);
    u.region = rng.weighted(region_weights);
    u.enterprise = !rng.chance(config.smb_fraction);
    u.activity = u.enterprise ? kEnterpriseActivity : 1.0;
    u.language = langs[rng.weighted(lang_weights)];
    const std::size_t topics = kMinTopics + rng.below(kMaxTopics - kMinTopics + 1);
    for (std::size_t t = 0; t < topics; ++t) {
      const double drawn = std::min(size.max_tokens, rng.pareto(size.alpha, size.min_tokens));
      const auto tokens = static_cast<std::uint64_t>(std::floor(drawn));
      auto words = detail::words_for(rng, u.language, tokens);
      std::vector<std::string> variants{detail::join(words)};
      const auto vocab = detail::vocabulary(u.language);
      for (std::size_t p = 0; p < kParaphrasesPerTopic; ++p) {
        auto changed = words;
        changed[rng.below(changed.size())] = vocab[rng.below(vocab.size())];
        variants.push_back(detail::join(changed));
      }
      u.topics.push_back(std::move(variants));
    }
    users.push_back(std::move(u));
  }
  return users;
}

/// Deterministic for a given config; `config.seed` names every stream.
inline Workload generate_workload(const SimConfig& config) {
  config.validate();
  Workload w;
  w.users = generate_users(config);
  if (config.duration_ms == 0 || config.query_count == 0) return w;

  struct Op {
    bool read;
    std::size_t user;
  };
  std::vector<double> activity;
  for (const User& u : w.users) activity.push_back(u.activity);
  Rng ops_rng = Rng::stream(config.seed, "ops");
  const double p_read = config.read_write_ratio / (config.read_write_ratio + 1.0);
  std::vector<Op> ops;
  while (w.reads < config.query_count) {
    const bool read = ops_rng.chance(p_read);
    ops.push_back(Op{read, ops_rng.weighted(activity)});
    ++(read ? w.reads : w.writes);
  }

  Rng time_rng = Rng::stream(config.seed, "times");
  std::vector<TimeMs> times(ops.size());
  for (TimeMs& t : times) t = static_cast<TimeMs>(time_rng.below(static_cast<std::uint64_t>(config.duration_ms)));
  std::sort(times.begin(), times.end());

  Rng text_rng = Rng::stream(config.seed, "query-text");
  Rng pii_rng = Rng::stream(config.seed, "pii");
  std::vector<std::optional<TimeMs>> last_seen(w.users.size());
  std::vector<std::uint64_t> session_no(w.users.size(), 0);
  std::vector<std::string> session(w.users.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Op& op = ops[i];
    const TimeMs at = times[i];
    const User& u = w.users[op.user];
    if (!last_seen[op.user] || at - *last_seen[op.user] > kSessionGapMs) {
      session[op.user] = u.id + "-s" + std::to_string(++session_no[op.user]);
      w.events.push_back(WorkloadEvent{at, EventKind::session_start, op.user, session[op.user], {}});
    }
    last_seen[op.user] = at;
    if (!op.read) {
      w.events.push_back(WorkloadEvent{at, EventKind::write, op.user, session[op.user], {}});
      continue;
    }
    // Zipf over the user's topics: topic k has weight 1 / (k + 1).
    std::vector<double> zipf;
    for (std::size_t k = 0; k < u.topics.size(); ++k) zipf.push_back(1.0 / static_cast<double>(k + 1));
    const auto& variants = u.topics[text_rng.weighted(zipf)];
    std::string text = text_rng.chance(kParaphraseRate) ? variants[1 + text_rng.below(variants.size() - 1)]
                                                        : variants[0];
    if (pii_rng.chance(config.pii_injection_rate)) text += " " + detail::pii_sample(pii_rng);
    w.events.push_back(WorkloadEvent{at, EventKind::query, op.user, session[op.user], std::move(text)});
  }
  return w;
}

/// One JSON object per line, in event order.
inline void write_workload(std::ostream& out, const SimConfig& config, const Workload& w) {
  for (const WorkloadEvent& e : w.events) {
    const User& u = w.users[e.user];
    json j{{"at", e.at},
           {"kind", std::string(to_string(e.kind))},
           {"user_id", u.id},
           {"region", config.regions[u.region].name},
           {"session_id", e.session_id}};
    if (e.kind == EventKind::query) j["text"] = e.text;
    out << j.dump() << '\n';
  }
}

}  // namespace junglekit::sim
