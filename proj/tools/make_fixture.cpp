// Writes the bundled synthetic corpus used by the pipeline tests:
//   squeezed: 2 step families per problem that reuse two hub steps
//   expanded: 8 step families per problem with no shared steps
// Every step is one sentence with its own embedding vector, so the
// clustering of chunks into steps is exact.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <tuple>

#include <json.hpp>

#include "../tests/oracles.hpp"
#include "reasonpath/reasonpath.hpp"

namespace fs = std::filesystem;
using namespace reasonpath;

namespace {

constexpr std::size_t kDim = 16;
constexpr int kSamples = 16;
const std::vector<std::pair<std::string, std::string>> kProblems{{"p1", "17"}, {"p2", "42"}, {"p3", "305"}};

struct StepBank {
  std::map<std::string, std::string> text;
  std::map<std::string, std::vector<double>> vec;
  std::mt19937_64 rng{20240611};

  const std::string& sentence(const std::string& id, const std::string& tail = "") {
    if (auto it = text.find(id); it != text.end()) return it->second;
    static const char* syll[] = {"ka", "lo", "mi", "ren", "tas", "vu", "zel", "po", "qui", "dar", "ne", "shu",
                                 "fa", "gor", "bel", "xi", "yum", "har", "cet", "wo"};
    std::uniform_int_distribution<int> pick(0, 19), len(2, 4);
    std::string s;
    for (int w = 0; w < 14; ++w) {
      if (w) s += ' ';
      for (int k = len(rng); k > 0; --k) s += syll[pick(rng)];
    }
    s += tail + ".";
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<double> v(kDim);
    for (auto& x : v) x = u(rng);
    vec[id] = v;
    return text[id] = s;
  }
};

struct Sample {
  std::string problem, model;
  int index;
  std::vector<std::string> steps;
};

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? argv[1] : "tests/data";
  fs::create_directories(dir);
  StepBank bank;
  std::vector<Sample> samples;

  for (const auto& [p, answer] : kProblems) {
    const std::string wrong = std::to_string(std::stoi(answer) + 1);
    // squeezed: A1 H0 A2 H1 A3 H0 A4 then a shared conclusion
    for (int i = 0; i < kSamples; ++i) {
      const int fam = i % 2;
      const std::string f = p + "/sq" + std::to_string(fam);
      Sample s{p, "squeezed", i, {}};
      s.steps = {f + "a1", "H0", f + "a2", "H1", f + "a3", "H0", f + "a4",
                 p + (fam == 0 ? "/end_ok" : "/end_bad")};
      samples.push_back(s);
    }
    // expanded: 8 disjoint chains, each with its own conclusion
    for (int i = 0; i < kSamples; ++i) {
      const int fam = i % 8;
      const std::string f = p + "/ex" + std::to_string(fam);
      Sample s{p, "expanded", i, {}};
      for (int k = 1; k <= 7; ++k) s.steps.push_back(f + "s" + std::to_string(k));
      s.steps.push_back(f + (fam % 2 == 0 ? "end_ok" : "end_bad"));
      samples.push_back(s);
    }
    // Register step texts; conclusions carry the boxed answer.
    for (const auto& s : samples) {
      if (s.problem != p) continue;
      for (const auto& id : s.steps) {
        const bool ok = id.size() >= 6 && id.compare(id.size() - 6, 6, "end_ok") == 0;
        const bool bad = id.size() >= 7 && id.compare(id.size() - 7, 7, "end_bad") == 0;
        bank.sentence(id, ok ? " so the answer is \\boxed{" + answer + "}"
                             : bad ? " so the answer is \\boxed{" + wrong + "}" : "");
      }
    }
  }

  // Each sample rewrites one word in two of its steps so that family members
  // are near duplicates rather than exact copies.
  std::mt19937_64 noise(99);
  std::map<std::tuple<std::string, std::string, int>, std::vector<std::string>> step_texts;
  for (const auto& s : samples) {
    auto& texts = step_texts[{s.problem, s.model, s.index}];
    for (const auto& id : s.steps) texts.push_back(bank.text.at(id));
    for (int r = 0; r < 2; ++r) {
      auto& t = texts[noise() % (texts.size() - 1)];
      std::vector<std::size_t> starts{0};
      for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] == ' ') starts.push_back(i + 1);
      const auto b = starts[noise() % (starts.size() - 1)];  // keep the final word and its period
      const auto e = t.find(' ', b);
      t.replace(b, e - b, "zum" + std::to_string(noise() % 1000));
    }
  }

  // corpus.jsonl and problems.jsonl; labels come from the verifier.
  {
    std::ofstream out(dir / "corpus.jsonl");
    for (const auto& s : samples) {
      std::string text;
      for (const auto& t : step_texts.at({s.problem, s.model, s.index})) text += (text.empty() ? "" : " ") + t;
      nlohmann::ordered_json j{{"problem_id", s.problem}, {"model_id", s.model}, {"sample_index", s.index},
                               {"text", text}};
      out << j.dump() << '\n';
    }
    std::ofstream pr(dir / "problems.jsonl");
    for (const auto& [p, a] : kProblems) pr << nlohmann::ordered_json{{"problem_id", p}, {"gold_answer", a}}.dump() << '\n';
  }

  const auto corpus = ingest((dir / "corpus.jsonl").string(), CorpusFormat::jsonl, (dir / "problems.jsonl").string());

  // Embeddings keyed by chunk position; segmentation must reproduce the steps.
  std::vector<EmbeddedSentence> es;
  std::size_t si = 0;
  for (const auto& s : corpus.samples()) {
    const auto& spec = *std::find_if(samples.begin(), samples.end(), [&](const Sample& x) {
      return x.problem == s.problem_id && x.model == s.model_id && x.index == s.sample_index;
    });
    const auto chunks = segment(s);
    if (chunks.size() != spec.steps.size()) {
      std::cerr << "segmentation mismatch in sample " << si << "\n";
      return 1;
    }
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      if (chunks[k].text != step_texts.at({spec.problem, spec.model, spec.index})[k]) {
        std::cerr << "chunk text mismatch\n";
        return 1;
      }
      es.push_back({ChunkRef{chunks[k].ref, chunks[k].position}, bank.vec.at(spec.steps[k])});
    }
    ++si;
  }
  write_embeddings(es, (dir / "embeddings.jsonl").string());

  nlohmann::ordered_json cfg{{"corpus", "corpus.jsonl"},     {"problems", "problems.jsonl"},
                             {"embeddings", "embeddings.jsonl"}, {"k", bank.vec.size()},
                             {"seed", 7},                     {"threshold", 0.4}};
  std::ofstream(dir / "config.json") << cfg.dump(2) << '\n';

  // Golden trajectory counts from the naive oracles.
  {
    std::ofstream out(dir / "golden_trajectories.csv");
    out << "problem_id,model_id,m_plus,m_minus,n_correct_clusters,n_incorrect_clusters\n";
    for (const auto& key : corpus.keys()) {
      std::vector<std::string> ok, bad;
      for (const auto& s : corpus.samples_for(key.first, key.second)) (s.correct ? ok : bad).push_back(s.text);
      out << key.first << ',' << key.second << ',' << ok.size() << ',' << bad.size() << ','
          << oracle::trajectory_clusters(ok, 0.4) << ',' << oracle::trajectory_clusters(bad, 0.4) << '\n';
    }
  }

  // Directional check on the generated data.
  auto rc = load_config((dir / "config.json").string());
  const auto report = run_all(corpus, rc);
  std::map<std::string, std::size_t> clusters;
  for (const auto& t : report.trajectories.counts) clusters[t.model_id] += t.n_correct_clusters + t.n_incorrect_clusters;
  std::cout << "clusters squeezed=" << clusters["squeezed"] << " expanded=" << clusters["expanded"] << "\n";
  bool ok = clusters["squeezed"] < clusters["expanded"];
  for (const auto& row : report.graphs.rows) {
    std::cout << row.problem_id << ' ' << row.model_id << " nodes=" << row.nodes;
    for (const auto& [m, fit] : row.decay) std::cout << ' ' << to_string(m) << '=' << (fit ? fit->beta : -1.0);
    std::cout << '\n';
  }
  for (const auto& [p, _] : kProblems) {
    const GraphRow *sq = nullptr, *ex = nullptr;
    for (const auto& row : report.graphs.rows) {
      if (row.problem_id != p) continue;
      (row.model_id == "squeezed" ? sq : ex) = &row;
    }
    for (const auto& [m, fit] : sq->decay) ok = ok && fit && ex->decay.at(m) && fit->beta > ex->decay.at(m)->beta;
  }
  std::cout << (ok ? "directional check holds\n" : "directional check FAILED\n");
  return ok ? 0 : 1;
}
