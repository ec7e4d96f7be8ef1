#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reasonpath/corpus.hpp"
#include "reasonpath/error.hpp"
#include "reasonpath/textsim.hpp"

namespace reasonpath {

/// Token counter hook. The default counts whitespace-delimited words; a
/// custom counter must be monotone in the length of a word-aligned prefix.
using TokenCounter = std::function<std::size_t(std::string_view)>;

struct SegmentOptions {
  std::size_t max_tokens = 300;
  std::size_t min_tokens = 10;
  TokenCounter count_tokens;  // empty: word_count
};

/// One reasoning step. [begin, end) is the byte range in the truncated text;
/// consecutive chunks tile it exactly. `text` is the range with surrounding
/// whitespace trimmed.
struct SentenceChunk {
  SampleRef ref;
  std::size_t position = 0;
  std::string text;
  std::size_t approx_tokens = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// The part of a response before the first </think>, or all of it.
inline std::string_view truncate_at_think(std::string_view text) {
  const auto pos = text.find("</think>");
  return pos == std::string_view::npos ? text : text.substr(0, pos);
}

namespace detail {

struct Span {
  std::size_t begin, end, tokens;
};

inline std::vector<std::size_t> split_points(std::string_view t) {
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if ((c == '.' || c == '?' || c == '!') && i + 1 < t.size() && t[i + 1] == ' ') {
      cuts.push_back(i + 1);
    } else if (t.compare(i, 4, "\r\n\r\n") == 0) {
      cuts.push_back(i + 4);
      i += 3;
    } else if (t.compare(i, 2, "\n\n") == 0) {
      cuts.push_back(i + 2);
      i += 1;
    }
  }
  return cuts;
}

inline std::string trim_copy(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace detail

/// Splits a response into reasoning-step chunks:
///  1. cut at the first </think>;
///  2. split after '.', '?', '!' followed by a space, and after blank lines;
///  3. merge chunks under min_tokens into the previous one (the first merges forward);
///  4. force-split chunks over max_tokens at word boundaries.
/// Merging runs before force-splitting and the force-split tail is rebalanced,
/// so every chunk lands in [min_tokens, max_tokens] whenever
/// max_tokens >= 2 * min_tokens - 1 and the text has at least min_tokens.
inline std::vector<SentenceChunk> segment(std::string_view text, const SegmentOptions& opt = {}) {
  if (!(opt.max_tokens > opt.min_tokens && opt.min_tokens >= 1)) {
    throw DomainError("segment: need max_tokens > min_tokens >= 1");
  }
  const TokenCounter count = opt.count_tokens ? opt.count_tokens : TokenCounter(word_count);
  const auto t = truncate_at_think(text);
  if (word_count(t) == 0) return {};
  auto tokens_of = [&](std::size_t b, std::size_t e) { return count(t.substr(b, e - b)); };

  std::vector<detail::Span> pieces;
  std::size_t prev = 0;
  auto cuts = detail::split_points(t);
  cuts.push_back(t.size());
  for (auto c : cuts) {
    if (c > prev) pieces.push_back({prev, c, tokens_of(prev, c)});
    prev = c;
  }

  std::vector<detail::Span> merged;
  for (const auto& p : pieces) {
    if (!merged.empty() && p.tokens < opt.min_tokens) {
      auto& last = merged.back();
      last.end = p.end;
      last.tokens = tokens_of(last.begin, last.end);
    } else {
      merged.push_back(p);
    }
  }
  if (merged.size() >= 2 && merged[0].tokens < opt.min_tokens) {
    merged[1].begin = merged[0].begin;
    merged[1].tokens = tokens_of(merged[1].begin, merged[1].end);
    merged.erase(merged.begin());
  }

  std::vector<detail::Span> out;
  for (const auto& m : merged) {
    if (m.tokens <= opt.max_tokens) {
      out.push_back(m);
      continue;
    }
    // Word start offsets inside the chunk.
    std::vector<std::size_t> words;
    for (std::size_t i = m.begin; i < m.end; ++i) {
      if (!detail::is_space(t[i]) && (i == m.begin || detail::is_space(t[i - 1]))) words.push_back(i);
    }
    auto word_begin = [&](std::size_t w) { return w < words.size() ? words[w] : m.end; };
    // Piece boundaries as word indices; the first piece keeps the chunk's leading whitespace.
    std::vector<std::size_t> starts{0};
    while (true) {
      const auto first = starts.back();
      const auto piece_begin = first == 0 ? m.begin : word_begin(first);
      if (tokens_of(piece_begin, m.end) <= opt.max_tokens) break;
      std::size_t lo = first + 1, hi = words.size();  // largest end word with count <= max
      while (lo < hi) {
        const auto mid = (lo + hi + 1) / 2;
        if (tokens_of(piece_begin, word_begin(mid)) <= opt.max_tokens) lo = mid;
        else hi = mid - 1;
      }
      starts.push_back(lo);
    }
    auto piece = [&](std::size_t k) {
      const auto b = k == 0 ? m.begin : word_begin(starts[k]);
      const auto e = k + 1 < starts.size() ? word_begin(starts[k + 1]) : m.end;
      return detail::Span{b, e, tokens_of(b, e)};
    };
    if (starts.size() >= 2) {
      auto& tail_start = starts.back();
      const auto before = starts[starts.size() - 2];
      while (piece(starts.size() - 1).tokens < opt.min_tokens && tail_start - 1 > before) {
        const auto b = before == 0 ? m.begin : word_begin(before);
        if (tokens_of(b, word_begin(tail_start - 1)) < opt.min_tokens) break;
        --tail_start;
      }
    }
    for (std::size_t k = 0; k < starts.size(); ++k) out.push_back(piece(k));
  }

  std::vector<SentenceChunk> chunks;
  chunks.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    SentenceChunk c;
    c.position = i;
    c.begin = out[i].begin;
    c.end = out[i].end;
    c.text = detail::trim_copy(t.substr(c.begin, c.end - c.begin));
    c.approx_tokens = out[i].tokens;
    chunks.push_back(std::move(c));
  }
  return chunks;
}

/// Segments one sample and stamps each chunk with its sample reference.
inline std::vector<SentenceChunk> segment(const TraceSample& sample, const SegmentOptions& opt = {}) {
  auto chunks = segment(std::string_view(sample.text), opt);
  for (auto& c : chunks) c.ref = {sample.problem_id, sample.model_id, sample.sample_index};
  return chunks;
}

}  // namespace reasonpath
