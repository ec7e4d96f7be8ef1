#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reasonpath/error.hpp"

namespace reasonpath {

/// One sampled response for one problem.
struct TraceSample {
  std::string problem_id;
  std::string model_id;
  int sample_index = 0;
  std::string text;
  bool correct = false;
  std::optional<std::string> extracted_answer;
  std::optional<std::size_t> token_count;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

/// Problems x models x samples. Samples are kept sorted by
/// (problem_id, model_id, sample_index).
class Corpus {
 public:
  using Key = std::pair<std::string, std::string>;

  Corpus() = default;

  /// Validates every invariant; throws DuplicateError / IngestError.
  Corpus(std::map<std::string, std::optional<std::string>> problems,
         std::vector<TraceSample> samples)
      : problems_(std::move(problems)), samples_(std::move(samples)) {
    std::sort(samples_.begin(), samples_.end(), [](const auto& a, const auto& b) {
      return std::tie(a.problem_id, a.model_id, a.sample_index) <
             std::tie(b.problem_id, b.model_id, b.sample_index);
    });
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto& s = samples_[i];
      if (!problems_.count(s.problem_id)) problems_.emplace(s.problem_id, std::nullopt);
      models_.insert(s.model_id);
      auto& idx = index_[{s.problem_id, s.model_id}];
      if (!idx.empty() && samples_[idx.back()].sample_index == s.sample_index) {
        throw DuplicateError("duplicate sample (" + s.problem_id + ", " + s.model_id +
                             ", " + std::to_string(s.sample_index) + ")");
      }
      idx.push_back(i);
    }
    for (const auto& [key, idx] : index_) {
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (samples_[idx[j]].sample_index != static_cast<int>(j)) {
          throw IngestError("sample_index values for (" + key.first + ", " + key.second +
                            ") are not contiguous from 0");
        }
      }
    }
  }

  const std::map<std::string, std::optional<std::string>>& problems() const { return problems_; }
  const std::set<std::string>& models() const { return models_; }
  const std::vector<TraceSample>& samples() const { return samples_; }

  bool contains(const std::string& problem_id, const std::string& model_id) const {
    return index_.count({problem_id, model_id}) > 0;
  }

  /// Samples of one (problem, model), in sample_index order.
  std::vector<TraceSample> samples_for(const std::string& problem_id,
                                       const std::string& model_id) const {
    auto it = index_.find({problem_id, model_id});
    if (it == index_.end()) {
      throw LookupError("unknown (problem, model) pair (" + problem_id + ", " + model_id + ")");
    }
    std::vector<TraceSample> out;
    out.reserve(it->second.size());
    for (auto i : it->second) out.push_back(samples_[i]);
    return out;
  }

  /// All (problem, model) keys present, sorted.
  std::vector<Key> keys() const {
    std::vector<Key> out;
    for (const auto& [k, _] : index_) out.push_back(k);
    return out;
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.problems_ == b.problems_ && a.samples_ == b.samples_;
  }

 private:
  std::map<std::string, std::optional<std::string>> problems_;
  std::set<std::string> models_;
  std::vector<TraceSample> samples_;
  std::map<Key, std::vector<std::size_t>> index_;
};

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace detail

/// Trim, strip surrounding '$', collapse internal whitespace runs to one space.
inline std::string normalize_answer(std::string_view s) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && detail::is_space(v.front())) v.remove_prefix(1);
    while (!v.empty() && detail::is_space(v.back())) v.remove_suffix(1);
    return v;
  };
  s = trim(s);
  while (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    s = trim(s.substr(1, s.size() - 2));
  }
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (detail::is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

/// Content of the last balanced \boxed{...} group, if any.
inline std::optional<std::string> extract_boxed(std::string_view text) {
  static constexpr std::string_view tag = "\\boxed{";
  std::optional<std::string> last;
  for (auto pos = text.find(tag); pos != std::string_view::npos; pos = text.find(tag, pos + 1)) {
    const auto open = pos + tag.size();
    int depth = 1;
    std::size_t i = open;
    for (; i < text.size() && depth > 0; ++i) {
      if (text[i] == '{') ++depth;
      else if (text[i] == '}') --depth;
    }
    if (depth == 0) last = std::string(text.substr(open, i - 1 - open));
  }
  return last;
}

/// True iff the last boxed answer in `text` matches `gold_answer` after
/// normalization. No boxed group means false.
inline bool verify_sample(std::string_view text, std::string_view gold_answer) {
  if (normalize_answer(gold_answer).empty()) {
    throw DomainError("verify_sample: gold answer must be non-empty");
  }
  auto boxed = extract_boxed(text);
  if (!boxed) return false;
  return normalize_answer(*boxed) == normalize_answer(gold_answer);
}

inline std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool sp = detail::is_space(c);
    if (!sp && !in_word) ++n;
    in_word = !sp;
  }
  return n;
}

/// Gold answers keyed by problem id, from {"problem_id", "gold_answer"} lines.
inline std::map<std::string, std::string> load_gold_answers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problems file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out[j.at("problem_id").get<std::string>()] = j.at("gold_answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

enum class CorpusFormat { jsonl };

/// Reads a trace JSONL file. Samples without a `correct` flag are labeled by
/// verify_sample against the line's gold answer or the optional problems file.
inline Corpus ingest(const std::string& path, CorpusFormat format = CorpusFormat::jsonl,
                     const std::optional<std::string>& problems_path = std::nullopt) {
  (void)format;
  std::map<std::string, std::optional<std::string>> problems;
  if (problems_path) {
    for (auto& [p, g] : load_gold_answers(*problems_path)) problems[p] = g;
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path);

  struct Pending {
    TraceSample sample;
    bool labeled;
    std::size_t lineno;
  };
  std::vector<Pending> pending;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    TraceSample s;
    bool labeled = false;
    try {
      auto j = nlohmann::json::parse(line);
      s.problem_id = j.at("problem_id").get<std::string>();
      s.model_id = j.at("model_id").get<std::string>();
      s.sample_index = j.at("sample_index").get<int>();
      s.text = j.at("text").get<std::string>();
      if (s.sample_index < 0) throw IngestError("negative sample_index");
      if (j.contains("correct") && !j["correct"].is_null()) {
        s.correct = j["correct"].get<bool>();
        labeled = true;
      }
      if (j.contains("token_count") && !j["token_count"].is_null()) {
        s.token_count = j["token_count"].get<std::size_t>();
      }
      if (j.contains("gold_answer") && !j["gold_answer"].is_null()) {
        auto gold = j["gold_answer"].get<std::string>();
        auto& slot = problems[s.problem_id];
        if (slot && *slot != gold) {
          throw IngestError("conflicting gold answers for problem " + s.problem_id);
        }
        slot = gold;
      }
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const IngestError& e) {
      throw IngestError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    pending.push_back({std::move(s), labeled, lineno});
  }

  std::vector<TraceSample> samples;
  samples.reserve(pending.size());
  for (auto& p : pending) {
    auto& s = p.sample;
    if (auto boxed = extract_boxed(s.text)) s.extracted_answer = normalize_answer(*boxed);
    if (!s.token_count) s.token_count = word_count(s.text);
    if (!p.labeled) {
      auto it = problems.find(s.problem_id);
      if (it == problems.end() || !it->second) {
        throw LabelError(path + ":" + std::to_string(p.lineno) + ": sample (" + s.problem_id +
                         ", " + s.model_id + ", " + std::to_string(s.sample_index) +
                         ") has neither `correct` nor a gold answer");
      }
      s.correct = verify_sample(s.text, *it->second);
    }
    samples.push_back(std::move(s));
  }
  return Corpus(std::move(problems), std::move(samples));
}

/// Writes the corpus in the ingest() format; ingest(write_jsonl(c)) == c.
inline void write_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : corpus.samples()) {
    nlohmann::ordered_json j;
    j["problem_id"] = s.problem_id;
    j["model_id"] = s.model_id;
    j["sample_index"] = s.sample_index;
    j["text"] = s.text;
    j["correct"] = s.correct;
    if (const auto& gold = corpus.problems().at(s.problem_id)) j["gold_answer"] = *gold;
    if (s.token_count) j["token_count"] = *s.token_count;
    out << j.dump() << '\n';
  }
}

/// Partition of one (problem, model) by correctness, preserving sample order.
inline std::pair<std::vector<TraceSample>, std::vector<TraceSample>> split_by_correctness(
    const Corpus& corpus, const std::string& problem_id, const std::string& model_id) {
  std::pair<std::vector<TraceSample>, std::vector<TraceSample>> out;
  for (auto& s : corpus.samples_for(problem_id, model_id)) {
    (s.correct ? out.first : out.second).push_back(std::move(s));
  }
  return out;
}

}  // namespace reasonpath
