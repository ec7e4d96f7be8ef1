#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "reasonpath/corpus.hpp"
#include "reasonpath/error.hpp"

namespace reasonpath {

enum class NGramUnit { character, word };
enum class WhitespacePolicy { strip, keep };
enum class SimilarityMetric { chrf, bleu };

/// Multiset of n-grams of one order. Character n-grams are keyed by their
/// UTF-8 text; word n-grams by their words joined with a single space.
struct NGramProfile {
  int order = 1;
  NGramUnit unit = NGramUnit::character;
  std::map<std::string, std::size_t> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& [_, c] : counts) t += c;
    return t;
  }
};

struct ChrfParams {
  double beta = 2.0;
  int max_order = 6;
  WhitespacePolicy whitespace = WhitespacePolicy::strip;
};

struct BleuParams {
  int max_order = 4;
};

struct SimilarityParams {
  SimilarityMetric metric = SimilarityMetric::chrf;
  ChrfParams chrf;
  BleuParams bleu;
  unsigned threads = 1;
};

namespace detail {

// Decodes UTF-8 into code points. Invalid bytes map to themselves.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
    char32_t cp = 0;
    bool ok = len > 0 && i + len <= s.size();
    if (ok) {
      cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
      for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b >> 6) != 0x2) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (!ok) {
      out.push_back(b0);
      ++i;
    } else {
      out.push_back(cp);
      i += len;
    }
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_unicode_space(char32_t c) {
  return c == U' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

// Units of a text: one UTF-8 string per code point, or per word.
inline std::vector<std::string> units(std::string_view text, NGramUnit unit,
                                      WhitespacePolicy ws) {
  std::vector<std::string> out;
  if (unit == NGramUnit::character) {
    for (char32_t c : decode_utf8(text)) {
      if (ws == WhitespacePolicy::strip && is_unicode_space(c)) continue;
      std::string u;
      append_utf8(u, c);
      out.push_back(std::move(u));
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      if (j > i) out.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

inline std::string join_units(const std::vector<std::string>& u, std::size_t begin,
                              std::size_t n, NGramUnit unit) {
  std::string key;
  for (std::size_t k = 0; k < n; ++k) {
    if (unit == NGramUnit::word && k > 0) key.push_back(' ');
    key += u[begin + k];
  }
  return key;
}

// Per-order counts shared by both n-gram routes.
struct OrderStats {
  std::uint64_t hyp_total = 0;
  std::uint64_t ref_total = 0;
  std::uint64_t overlap = 0;
};

inline double chrf_from_stats(std::span<const OrderStats> stats, double beta) {
  double p_sum = 0.0, r_sum = 0.0;
  int p_cnt = 0, r_cnt = 0;
  for (const auto& s : stats) {
    if (s.hyp_total > 0) {
      p_sum += static_cast<double>(s.overlap) / static_cast<double>(s.hyp_total);
      ++p_cnt;
    }
    if (s.ref_total > 0) {
      r_sum += static_cast<double>(s.overlap) / static_cast<double>(s.ref_total);
      ++r_cnt;
    }
  }
  if (p_cnt == 0 && r_cnt == 0) return 1.0;
  if (p_cnt == 0 || r_cnt == 0) return 0.0;
  const double p = p_sum / p_cnt;
  const double r = r_sum / r_cnt;
  const double b2 = beta * beta;
  const double denom = b2 * p + r;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * (p * r) / denom;
}

// `stats[0]` is unigrams; hyp_total of order 1 is the hypothesis length.
inline double bleu_from_stats(std::span<const OrderStats> stats) {
  const auto hyp_len = stats[0].hyp_total;
  const auto ref_len = stats[0].ref_total;
  if (hyp_len == 0 || stats[0].overlap == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(stats[0].overlap) /
                            static_cast<double>(stats[0].hyp_total));
  for (std::size_t n = 1; n < stats.size(); ++n) {
    log_sum += std::log(static_cast<double>(stats[n].overlap + 1) /
                        static_cast<double>(stats[n].hyp_total + 1));
  }
  const double geo = std::exp(log_sum / static_cast<double>(stats.size()));
  const double bp = hyp_len < ref_len
                        ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                        : 1.0;
  return geo * bp;
}

inline OrderStats profile_stats(const NGramProfile& hyp, const NGramProfile& ref) {
  OrderStats s;
  s.hyp_total = hyp.total();
  s.ref_total = ref.total();
  for (const auto& [k, c] : hyp.counts) {
    if (auto it = ref.counts.find(k); it != ref.counts.end()) s.overlap += std::min(c, it->second);
  }
  return s;
}

}  // namespace detail

/// Sliding-window n-gram multiset of `text`.
inline NGramProfile ngram_profile(std::string_view text, int order,
                                  NGramUnit unit = NGramUnit::character,
                                  WhitespacePolicy ws = WhitespacePolicy::strip) {
  if (order < 1) throw DomainError("ngram_profile: order must be >= 1");
  NGramProfile p{order, unit, {}};
  const auto u = detail::units(text, unit, ws);
  const auto n = static_cast<std::size_t>(order);
  for (std::size_t i = 0; i + n <= u.size(); ++i) ++p.counts[detail::join_units(u, i, n, unit)];
  return p;
}

/// Character n-gram F-score of `hyp` against `ref` in [0,1]. Precision and
/// recall are macro-averaged over orders 1..max_order that have n-grams.
/// Both sides empty gives 1, exactly one side empty gives 0.
inline double chrf(std::string_view hyp, std::string_view ref, double beta = 2.0,
                   int max_order = 6, WhitespacePolicy ws = WhitespacePolicy::strip) {
  if (!(beta > 0.0)) throw DomainError("chrf: beta must be > 0");
  if (max_order < 1) throw DomainError("chrf: max_order must be >= 1");
  std::vector<detail::OrderStats> stats;
  for (int n = 1; n <= max_order; ++n) {
    stats.push_back(detail::profile_stats(ngram_profile(hyp, n, NGramUnit::character, ws),
                                          ngram_profile(ref, n, NGramUnit::character, ws)));
  }
  return detail::chrf_from_stats(stats, beta);
}

/// Sentence BLEU over whitespace words with add-one smoothing on orders > 1
/// and the usual brevity penalty.
inline double bleu(std::string_view hyp, std::string_view ref, int max_order = 4) {
  if (max_order < 1) throw DomainError("bleu: max_order must be >= 1");
  std::vector<detail::OrderStats> stats;
  for (int n = 1; n <= max_order; ++n) {
    stats.push_back(detail::profile_stats(ngram_profile(hyp, n, NGramUnit::word),
                                          ngram_profile(ref, n, NGramUnit::word)));
  }
  // Lengths come from unigram totals even when higher orders are empty.
  return detail::bleu_from_stats(stats);
}

struct SampleRef {
  std::string problem_id;
  std::string model_id;
  int sample_index = 0;

  friend auto operator<=>(const SampleRef&, const SampleRef&) = default;
};

/// Dense symmetric similarity matrix with unit diagonal.
struct SimilarityMatrix {
  std::vector<SampleRef> ids;
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n
  SimilarityMetric metric = SimilarityMetric::chrf;
  SimilarityParams params;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

namespace detail {

// Interned n-gram profile: per order, (id, count) sorted by id.
struct InternedProfile {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> orders;
  std::vector<std::uint64_t> totals;
};

class NGramInterner {
 public:
  InternedProfile profile(std::string_view text, int max_order, NGramUnit unit,
                          WhitespacePolicy ws) {
    InternedProfile p;
    const auto u = units(text, unit, ws);
    for (int order = 1; order <= max_order; ++order) {
      std::unordered_map<std::uint32_t, std::uint32_t> counts;
      const auto n = static_cast<std::size_t>(order);
      std::uint64_t total = 0;
      for (std::size_t i = 0; i + n <= u.size(); ++i) {
        auto [it, inserted] =
            ids_.try_emplace(join_units(u, i, n, unit), static_cast<std::uint32_t>(ids_.size()));
        ++counts[it->second];
        ++total;
      }
      std::vector<std::pair<std::uint32_t, std::uint32_t>> v(counts.begin(), counts.end());
      std::sort(v.begin(), v.end());
      p.orders.push_back(std::move(v));
      p.totals.push_back(total);
    }
    return p;
  }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
};

inline std::vector<OrderStats> interned_stats(const InternedProfile& hyp,
                                              const InternedProfile& ref) {
  std::vector<OrderStats> stats(hyp.orders.size());
  for (std::size_t o = 0; o < hyp.orders.size(); ++o) {
    auto& s = stats[o];
    s.hyp_total = hyp.totals[o];
    s.ref_total = ref.totals[o];
    const auto& a = hyp.orders[o];
    const auto& b = ref.orders[o];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i].first < b[j].first) ++i;
      else if (b[j].first < a[i].first) ++j;
      else {
        s.overlap += std::min(a[i].second, b[j].second);
        ++i;
        ++j;
      }
    }
  }
  return stats;
}

}  // namespace detail

/// Pairwise symmetrized similarity, s_ij = (m(i,j) + m(j,i)) / 2. Each
/// unordered pair is evaluated once, so the result is exactly symmetric and
/// independent of the thread count.
inline SimilarityMatrix similarity_matrix(std::span<const std::string> texts,
                                          const SimilarityParams& params = {},
                                          std::vector<SampleRef> ids = {}) {
  if (params.metric == SimilarityMetric::chrf) {
    if (!(params.chrf.beta > 0.0)) throw DomainError("chrf: beta must be > 0");
    if (params.chrf.max_order < 1) throw DomainError("chrf: max_order must be >= 1");
  } else if (params.bleu.max_order < 1) {
    throw DomainError("bleu: max_order must be >= 1");
  }
  SimilarityMatrix m;
  m.n = texts.size();
  m.ids = std::move(ids);
  m.metric = params.metric;
  m.params = params;
  m.values.assign(m.n * m.n, 0.0);

  const bool is_chrf = params.metric == SimilarityMetric::chrf;
  detail::NGramInterner interner;
  std::vector<detail::InternedProfile> profiles;
  profiles.reserve(m.n);
  for (const auto& t : texts) {
    profiles.push_back(is_chrf ? interner.profile(t, params.chrf.max_order, NGramUnit::character,
                                                  params.chrf.whitespace)
                               : interner.profile(t, params.bleu.max_order, NGramUnit::word,
                                                  WhitespacePolicy::strip));
  }
  auto score = [&](std::size_t a, std::size_t b) {
    const auto stats = detail::interned_stats(profiles[a], profiles[b]);
    return is_chrf ? detail::chrf_from_stats(stats, params.chrf.beta)
                   : detail::bleu_from_stats(stats);
  };

  std::atomic<std::size_t> next_row{0};
  auto worker = [&] {
    for (std::size_t i = next_row++; i < m.n; i = next_row++) {
      m.values[i * m.n + i] = 1.0;
      for (std::size_t j = i + 1; j < m.n; ++j) {
        const double s = (score(i, j) + score(j, i)) / 2.0;
        m.values[i * m.n + j] = s;
        m.values[j * m.n + i] = s;
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(params.threads, static_cast<unsigned>(m.n)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return m;
}

inline SimilarityMatrix similarity_matrix(std::span<const TraceSample> samples,
                                          const SimilarityParams& params = {}) {
  std::vector<std::string> texts;
  std::vector<SampleRef> ids;
  for (const auto& s : samples) {
    texts.push_back(s.text);
    ids.push_back({s.problem_id, s.model_id, s.sample_index});
  }
  return similarity_matrix(std::span<const std::string>(texts), params, std::move(ids));
}

}  // namespace reasonpath
