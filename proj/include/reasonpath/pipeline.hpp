#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reasonpath/corpus.hpp"
#include "reasonpath/embed_client.hpp"
#include "reasonpath/embedspace.hpp"
#include "reasonpath/error.hpp"
#include "reasonpath/gmetrics.hpp"
#include "reasonpath/rgraph.hpp"
#include "reasonpath/segmenter.hpp"
#include "reasonpath/textsim.hpp"
#include "reasonpath/trajcluster.hpp"

namespace reasonpath {

inline constexpr const char* toolkit_version = "0.1.0";
inline constexpr int report_schema_version = 1;

enum class EmbedSource { file, service };

struct RunConfig {
  std::string corpus_path;
  std::optional<std::string> problems_path;
  std::string out_dir = "out";

  SimilarityMetric metric = SimilarityMetric::chrf;
  double chrf_beta = 2.0;
  int chrf_max_order = 6;
  WhitespacePolicy whitespace = WhitespacePolicy::strip;
  int bleu_max_order = 4;
  double threshold = 0.4;  // UPGMA cut distance (similarity 0.60)
  std::vector<int> ks;     // empty: powers of two up to the smallest sample count

  EmbedSource embed_source = EmbedSource::file;
  std::string embeddings_path;
  std::string embed_url;
  std::size_t embed_batch_size = 32;
  unsigned embed_max_in_flight = 1;

  std::size_t max_tokens = 300;
  std::size_t min_tokens = 10;

  std::optional<std::size_t> k;  // empty: min(2000, points / 2)
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  bool normalize_embeddings = false;

  BetweennessMode betweenness_mode = BetweennessMode::directed;
  std::optional<RankRange> rank_range;
  unsigned threads = 1;

  SimilarityParams similarity_params() const {
    SimilarityParams p;
    p.metric = metric;
    p.chrf = {chrf_beta, chrf_max_order, whitespace};
    p.bleu = {bleu_max_order};
    p.threads = threads;
    return p;
  }

  SegmentOptions segment_options() const { return {max_tokens, min_tokens, {}}; }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (corpus_path.empty()) fail("corpus path is required");
    if (!(chrf_beta > 0.0)) fail("chrf beta must be > 0");
    if (chrf_max_order < 1 || bleu_max_order < 1) fail("n-gram orders must be >= 1");
    if (!(threshold >= 0.0)) fail("threshold must be >= 0");
    for (int k : ks) {
      if (k < 1) fail("pass@k values must be >= 1");
    }
    if (!(max_tokens > min_tokens && min_tokens >= 1)) fail("need max_tokens > min_tokens >= 1");
    if (k && *k < 1) fail("K must be >= 1");
    if (n_init < 1 || max_iter < 1 || !(tol >= 0.0)) fail("invalid K-means parameters");
    if (embed_batch_size < 1) fail("embedding batch size must be >= 1");
    if (rank_range && (rank_range->first < 1 || rank_range->last < rank_range->first)) {
      fail("invalid rank range");
    }
  }
};

// ---------------------------------------------------------------------------
// Config (de)serialization

namespace detail {

inline const char* to_string(SimilarityMetric m) { return m == SimilarityMetric::chrf ? "chrf" : "bleu"; }
inline const char* to_string(EmbedSource s) { return s == EmbedSource::file ? "file" : "service"; }

inline SimilarityMetric parse_metric(const std::string& s) {
  if (s == "chrf") return SimilarityMetric::chrf;
  if (s == "bleu") return SimilarityMetric::bleu;
  throw ConfigError("unknown metric '" + s + "'");
}

inline EmbedSource parse_embed_source(const std::string& s) {
  if (s == "file") return EmbedSource::file;
  if (s == "service") return EmbedSource::service;
  throw ConfigError("unknown embedding source '" + s + "'");
}

}  // namespace detail

/// Canonical JSON form of a config. Input paths are reduced to file names so
/// the same inputs hash the same from any directory; the output directory and
/// thread count are left out since they cannot change results.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  auto name = [](const std::string& p) { return std::filesystem::path(p).filename().string(); };
  nlohmann::ordered_json j;
  j["corpus"] = name(c.corpus_path);
  j["problems"] = c.problems_path ? nlohmann::ordered_json(name(*c.problems_path)) : nlohmann::ordered_json(nullptr);
  j["metric"] = detail::to_string(c.metric);
  j["chrf_beta"] = c.chrf_beta;
  j["chrf_max_order"] = c.chrf_max_order;
  j["whitespace"] = c.whitespace == WhitespacePolicy::strip ? "strip" : "keep";
  j["bleu_max_order"] = c.bleu_max_order;
  j["threshold"] = c.threshold;
  j["ks"] = c.ks;
  j["embed_source"] = detail::to_string(c.embed_source);
  j["embeddings"] = name(c.embeddings_path);
  j["embed_url"] = c.embed_url;
  j["embed_batch_size"] = c.embed_batch_size;
  j["max_tokens"] = c.max_tokens;
  j["min_tokens"] = c.min_tokens;
  j["k"] = c.k ? nlohmann::ordered_json(*c.k) : nlohmann::ordered_json(nullptr);
  j["n_init"] = c.n_init;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["seed"] = c.seed;
  j["normalize_embeddings"] = c.normalize_embeddings;
  j["betweenness_mode"] = c.betweenness_mode == BetweennessMode::directed ? "directed" : "undirected";
  if (c.rank_range) {
    j["rank_range"] = {c.rank_range->first, c.rank_range->last};
  } else {
    j["rank_range"] = nullptr;
  }
  return j;
}

/// Applies the keys present in `j` on top of `c`. Relative paths resolve
/// against `base_dir`.
inline void apply_config_json(RunConfig& c, const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  auto path_of = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return (fp.is_relative() && !base_dir.empty() ? base_dir / fp : fp).lexically_normal().string();
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (v.is_null()) continue;
      if (key == "corpus") c.corpus_path = path_of(v.get<std::string>());
      else if (key == "problems") c.problems_path = path_of(v.get<std::string>());
      else if (key == "out") c.out_dir = path_of(v.get<std::string>());
      else if (key == "metric") c.metric = detail::parse_metric(v.get<std::string>());
      else if (key == "chrf_beta") c.chrf_beta = v.get<double>();
      else if (key == "chrf_max_order") c.chrf_max_order = v.get<int>();
      else if (key == "whitespace") {
        const auto s = v.get<std::string>();
        if (s != "strip" && s != "keep") throw ConfigError("whitespace must be strip or keep");
        c.whitespace = s == "strip" ? WhitespacePolicy::strip : WhitespacePolicy::keep;
      } else if (key == "bleu_max_order") c.bleu_max_order = v.get<int>();
      else if (key == "threshold") c.threshold = v.get<double>();
      else if (key == "ks") c.ks = v.get<std::vector<int>>();
      else if (key == "embed_source") c.embed_source = detail::parse_embed_source(v.get<std::string>());
      else if (key == "embeddings") c.embeddings_path = path_of(v.get<std::string>());
      else if (key == "embed_url") c.embed_url = v.get<std::string>();
      else if (key == "embed_batch_size") c.embed_batch_size = v.get<std::size_t>();
      else if (key == "embed_max_in_flight") c.embed_max_in_flight = v.get<unsigned>();
      else if (key == "max_tokens") c.max_tokens = v.get<std::size_t>();
      else if (key == "min_tokens") c.min_tokens = v.get<std::size_t>();
      else if (key == "k") c.k = v.get<std::size_t>();
      else if (key == "n_init") c.n_init = v.get<int>();
      else if (key == "max_iter") c.max_iter = v.get<int>();
      else if (key == "tol") c.tol = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "normalize_embeddings") c.normalize_embeddings = v.get<bool>();
      else if (key == "betweenness_mode") {
        const auto s = v.get<std::string>();
        if (s != "directed" && s != "undirected") throw ConfigError("betweenness_mode must be directed or undirected");
        c.betweenness_mode = s == "directed" ? BetweennessMode::directed : BetweennessMode::undirected;
      } else if (key == "rank_range") {
        const auto r = v.get<std::vector<std::size_t>>();
        if (r.size() != 2) throw ConfigError("rank_range must be [first, last]");
        c.rank_range = RankRange{r[0], r[1]};
      } else if (key == "threads") c.threads = v.get<unsigned>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  RunConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  apply_config_json(c, j, std::filesystem::path(path).parent_path());
  return c;
}

/// 64-bit FNV-1a, hex-encoded.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Per-stage seed derived from the run seed and a stage tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  return detail::splitmix64(seed ^ std::stoull(fnv1a_hex(std::string(stage)), nullptr, 16));
}

// ---------------------------------------------------------------------------
// Report fragments

struct TrajectoryFragment {
  std::vector<TrajectoryCounts> counts;
  std::map<std::string, std::map<int, double>> pass_at_k;  // model -> k -> value
};

struct GraphRow {
  std::string problem_id;
  std::string model_id;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t samples = 0;
  std::size_t chunks = 0;
  std::map<RankMeasure, std::optional<DecayFit>> decay;
  std::map<RankMeasure, std::string> decay_absent;
  std::optional<GlobalMetrics> global;
  GraphletCensus graphlets;
};

struct SmapeRow {
  std::string problem_id;
  std::string model_a;
  std::string model_b;
  double smape = 0.0;
};

struct GraphFragment {
  std::size_t k = 0;
  double inertia = 0.0;
  int iterations_run = 0;
  std::size_t points = 0;
  std::map<std::string, std::size_t> points_by_model;
  std::vector<GraphRow> rows;
  std::vector<SmapeRow> smape;
  std::map<std::string, GraphletCensus> graphlets_by_model;  // union over problems
  // Built graphs and their ranked measures, for exports.
  std::vector<ReasoningGraph> graphs;
  std::map<std::pair<std::string, std::string>, std::map<RankMeasure, RankSeries>> rank_series;
};

struct MetricsReport {
  nlohmann::ordered_json config;
  std::string config_hash;
  TrajectoryFragment trajectories;
  GraphFragment graphs;
};

// ---------------------------------------------------------------------------
// Stages

inline std::vector<int> default_ks(const Corpus& corpus) {
  std::size_t min_n = std::numeric_limits<std::size_t>::max();
  for (const auto& [p, m] : corpus.keys()) min_n = std::min(min_n, corpus.samples_for(p, m).size());
  std::vector<int> ks;
  for (std::size_t k = 1; corpus.samples().size() > 0 && k <= min_n; k *= 2) ks.push_back(static_cast<int>(k));
  return ks;
}

inline Corpus load_corpus(const RunConfig& cfg) {
  return ingest(cfg.corpus_path, CorpusFormat::jsonl, cfg.problems_path);
}

inline TrajectoryFragment run_trajectories(const Corpus& corpus, const RunConfig& cfg) {
  TrajectoryFragment f;
  const auto params = cfg.similarity_params();
  for (const auto& [p, m] : corpus.keys()) {
    try {
      f.counts.push_back(count_unique_trajectories(corpus, p, m, params, cfg.threshold));
    } catch (const Error& e) {
      throw Error(e.kind(), "trajectories (" + p + ", " + m + "): " + e.what());
    }
  }
  const auto ks = cfg.ks.empty() ? default_ks(corpus) : cfg.ks;
  for (const auto& model : corpus.models()) f.pass_at_k[model] = pass_at_k_curve(corpus, model, ks);
  return f;
}

/// Segments every sample and returns chunks in (problem, model, sample, position) order.
inline std::vector<SentenceChunk> segment_corpus(const Corpus& corpus, const RunConfig& cfg) {
  std::vector<SentenceChunk> all;
  const auto opt = cfg.segment_options();
  for (const auto& s : corpus.samples()) {
    auto chunks = segment(s, opt);
    all.insert(all.end(), std::make_move_iterator(chunks.begin()), std::make_move_iterator(chunks.end()));
  }
  return all;
}

/// Embeddings aligned with `chunks`, from the configured source.
inline std::vector<std::vector<double>> embed_chunks(const std::vector<SentenceChunk>& chunks,
                                                     const RunConfig& cfg) {
  std::vector<std::vector<double>> vectors;
  vectors.reserve(chunks.size());
  if (cfg.embed_source == EmbedSource::service) {
    FetchOptions fo;
    fo.batch_size = cfg.embed_batch_size;
    fo.max_in_flight = cfg.embed_max_in_flight;
    for (auto& e : fetch_embeddings(cfg.embed_url, chunks, fo)) vectors.push_back(std::move(e.vector));
    return vectors;
  }
  if (cfg.embeddings_path.empty()) throw ConfigError("embedding file path is required for embed_source=file");
  std::map<ChunkRef, std::vector<double>> by_ref;
  for (auto& e : load_embeddings(cfg.embeddings_path)) by_ref[e.ref] = std::move(e.vector);
  std::vector<std::string> missing;
  for (const auto& c : chunks) {
    auto it = by_ref.find(ChunkRef{c.ref, c.position});
    if (it == by_ref.end()) {
      missing.push_back(to_string(ChunkRef{c.ref, c.position}));
      continue;
    }
    vectors.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " chunk(s) have no embedding:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw SchemaError(msg);
  }
  return vectors;
}

inline GraphFragment run_graphs(const Corpus& corpus, const RunConfig& cfg) {
  GraphFragment f;
  const auto chunks = segment_corpus(corpus, cfg);
  auto vectors = embed_chunks(chunks, cfg);
  if (cfg.normalize_embeddings) {
    for (auto& v : vectors) l2_normalize(v);
  }
  f.points = vectors.size();
  for (const auto& c : chunks) ++f.points_by_model[c.ref.model_id];
  if (vectors.empty()) return f;

  KMeansOptions ko;
  if (cfg.k) {
    ko.k = *cfg.k;
  } else {
    // Default K, capped by the distinct point count so duplicates cannot make it infeasible.
    const std::set<std::vector<double>> distinct(vectors.begin(), vectors.end());
    ko.k = std::min(distinct.size(), std::max<std::size_t>(1, std::min<std::size_t>(2000, vectors.size() / 2)));
  }
  ko.n_init = cfg.n_init;
  ko.max_iter = cfg.max_iter;
  ko.tol = cfg.tol;
  ko.seed = derive_seed(cfg.seed, "kmeans");
  ko.threads = cfg.threads;
  const auto model = kmeans_fit(vectors, ko);
  f.k = model.k;
  f.inertia = model.inertia;
  f.iterations_run = model.iterations_run;

  // Node sequence per sample, then union graph per (problem, model).
  std::map<std::pair<std::string, std::string>, std::vector<NodePath>> paths;
  std::map<std::pair<std::string, std::string>, std::size_t> chunk_counts;
  {
    std::size_t i = 0;
    for (const auto& s : corpus.samples()) {
      std::vector<NodeId> seq;
      while (i < chunks.size() && chunks[i].ref == SampleRef{s.problem_id, s.model_id, s.sample_index}) {
        seq.push_back(nearest_centroid(model, vectors[i]));
        ++i;
      }
      chunk_counts[{s.problem_id, s.model_id}] += seq.size();
      paths[{s.problem_id, s.model_id}].push_back(build_path(seq, {s.problem_id, s.model_id, s.sample_index}));
    }
  }

  std::map<std::string, std::map<std::string, std::map<NodeId, double>>> visit_freq;  // problem -> model
  std::map<std::string, std::vector<NodePath>> model_paths;
  for (const auto& [key, ps] : paths) {
    auto g = build_graph(ps, model);
    g.problem_id = key.first;
    g.model_id = key.second;
    GraphRow row;
    row.problem_id = key.first;
    row.model_id = key.second;
    row.nodes = g.node_count();
    row.edges = g.edges.size();
    row.samples = ps.size();
    row.chunks = chunk_counts[key];
    auto& series = f.rank_series[key];
    if (!g.empty()) {
      const auto vf = visitation_frequency(g);
      visit_freq[key.first][key.second] = vf;
      series[RankMeasure::visitation_frequency] = rank_series(RankMeasure::visitation_frequency, vf);
      series[RankMeasure::degree] = rank_series(RankMeasure::degree, degree(g));
      series[RankMeasure::betweenness] = rank_series(RankMeasure::betweenness, betweenness(g, cfg.betweenness_mode));
      row.global = global_metrics(g);
    } else {
      for (auto m : {RankMeasure::visitation_frequency, RankMeasure::degree, RankMeasure::betweenness}) {
        series[m] = RankSeries{m, {}};
      }
    }
    for (const auto& [m, s] : series) {
      try {
        row.decay[m] = fit_decay(s, cfg.rank_range);
      } catch (const FitError&) {
        row.decay[m] = std::nullopt;
        row.decay_absent[m] = "fewer_than_2_positive_values";
      }
    }
    row.graphlets = graphlet_census(g);
    auto& mp = model_paths[key.second];
    mp.insert(mp.end(), ps.begin(), ps.end());
    f.rows.push_back(std::move(row));
    f.graphs.push_back(std::move(g));
  }
  for (const auto& [m, ps] : model_paths) f.graphlets_by_model[m] = graphlet_census(build_graph(ps, model));

  for (const auto& [problem, by_model] : visit_freq) {
    for (auto a = by_model.begin(); a != by_model.end(); ++a) {
      for (auto b = std::next(a); b != by_model.end(); ++b) {
        f.smape.push_back({problem, a->first, b->first, smape(a->second, b->second)});
      }
    }
  }
  return f;
}

inline MetricsReport run_all(const Corpus& corpus, const RunConfig& cfg) {
  MetricsReport r;
  r.config = to_json(cfg);
  r.config_hash = fnv1a_hex(r.config.dump());
  r.trajectories = run_trajectories(corpus, cfg);
  r.graphs = run_graphs(corpus, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string csv_num(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

}  // namespace detail

inline nlohmann::ordered_json to_json(const GlobalMetrics& g) {
  nlohmann::ordered_json j;
  j["edge_density"] = detail::opt_json(g.edge_density);
  j["clustering_coefficient_norm"] = detail::opt_json(g.clustering_coefficient_norm);
  j["assortativity"] = detail::opt_json(g.assortativity);
  j["modularity"] = detail::opt_json(g.modularity);
  j["freeman_centralization"] = detail::opt_json(g.freeman_centralization);
  j["avg_path_length_norm"] = detail::opt_json(g.avg_path_length_norm);
  j["global_efficiency"] = detail::opt_json(g.global_efficiency);
  j["algebraic_connectivity"] = detail::opt_json(g.algebraic_connectivity);
  j["small_world_sigma"] = detail::opt_json(g.small_world_sigma);
  j["clustering_coefficient"] = detail::opt_json(g.clustering_coefficient);
  j["avg_path_length"] = detail::opt_json(g.avg_path_length);
  j["disconnected_pair_fraction"] = g.disconnected_pair_fraction;
  j["communities"] = g.communities;
  j["absent"] = g.absent;
  return j;
}

inline nlohmann::ordered_json to_json(const GraphletCensus& c) {
  nlohmann::ordered_json j, counts, props;
  for (std::size_t i = 0; i < 6; ++i) {
    counts[graphlet_labels[i]] = c.counts[i];
    props[graphlet_labels[i]] = c.proportions[i];
  }
  j["counts"] = counts;
  j["proportions"] = props;
  return j;
}

inline nlohmann::ordered_json to_json(const TrajectoryFragment& f) {
  nlohmann::ordered_json j;
  j["trajectories"] = nlohmann::ordered_json::array();
  for (const auto& t : f.counts) {
    j["trajectories"].push_back({{"problem_id", t.problem_id},
                                 {"model_id", t.model_id},
                                 {"m_plus", t.m_plus},
                                 {"m_minus", t.m_minus},
                                 {"n_correct_clusters", t.n_correct_clusters},
                                 {"n_incorrect_clusters", t.n_incorrect_clusters},
                                 {"threshold", t.threshold}});
  }
  j["pass_at_k"] = nlohmann::ordered_json::object();
  for (const auto& [model, curve] : f.pass_at_k) {
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [k, v] : curve) c[std::to_string(k)] = v;
    j["pass_at_k"][model] = c;
  }
  return j;
}

inline nlohmann::ordered_json to_json(const GraphFragment& f) {
  nlohmann::ordered_json j;
  j["kmeans"] = {{"k", f.k},
                 {"inertia", f.inertia},
                 {"iterations_run", f.iterations_run},
                 {"points", f.points},
                 {"points_by_model", f.points_by_model}};
  j["graphs"] = nlohmann::ordered_json::array();
  for (const auto& r : f.rows) {
    nlohmann::ordered_json g;
    g["problem_id"] = r.problem_id;
    g["model_id"] = r.model_id;
    g["samples"] = r.samples;
    g["chunks"] = r.chunks;
    g["nodes"] = r.nodes;
    g["edges"] = r.edges;
    nlohmann::ordered_json decay = nlohmann::ordered_json::object();
    for (const auto& [m, fit] : r.decay) {
      if (fit) {
        decay[to_string(m)] = {{"beta", fit->beta},
                               {"alpha", fit->alpha},
                               {"r_squared", fit->r_squared},
                               {"n_points", fit->n_points}};
      } else {
        decay[to_string(m)] = {{"absent", r.decay_absent.at(m)}};
      }
    }
    g["decay"] = decay;
    g["global_metrics"] = r.global ? to_json(*r.global) : nlohmann::ordered_json(nullptr);
    g["graphlets"] = to_json(r.graphlets);
    j["graphs"].push_back(g);
  }
  j["graphlets_by_model"] = nlohmann::ordered_json::object();
  for (const auto& [m, c] : f.graphlets_by_model) j["graphlets_by_model"][m] = to_json(c);
  j["smape"] = nlohmann::ordered_json::array();
  for (const auto& s : f.smape) {
    j["smape"].push_back({{"problem_id", s.problem_id},
                          {"model_a", s.model_a},
                          {"model_b", s.model_b},
                          {"smape", s.smape}});
  }
  return j;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = report_schema_version;
  j["toolkit_version"] = toolkit_version;
  j["config_hash"] = r.config_hash;
  j["config"] = r.config;
  j.update(to_json(r.trajectories));
  j.update(to_json(r.graphs));
  return j;
}

/// Merges separately produced fragment JSON (trajectories and graphs) into a
/// full report document.
inline nlohmann::ordered_json merge_fragments(const nlohmann::ordered_json& config,
                                              const nlohmann::ordered_json& trajectories,
                                              const nlohmann::ordered_json& graphs) {
  nlohmann::ordered_json j;
  j["schema_version"] = report_schema_version;
  j["toolkit_version"] = toolkit_version;
  j["config_hash"] = fnv1a_hex(config.dump());
  j["config"] = config;
  for (auto& [k, v] : trajectories.items()) j[k] = v;
  for (auto& [k, v] : graphs.items()) j[k] = v;
  return j;
}

/// Flat CSV, one row per (problem, model), from a report document.
inline std::string report_csv(const nlohmann::ordered_json& report) {
  static const std::array<const char*, 9> metric_keys{
      "edge_density", "clustering_coefficient_norm", "assortativity", "modularity", "freeman_centralization",
      "avg_path_length_norm", "global_efficiency", "algebraic_connectivity", "small_world_sigma"};
  static const std::array<const char*, 3> measures{"visitation_frequency", "degree", "betweenness"};
  std::map<std::pair<std::string, std::string>, nlohmann::ordered_json> traj, graph;
  if (report.contains("trajectories")) {
    for (const auto& t : report["trajectories"]) traj[{t["problem_id"], t["model_id"]}] = t;
  }
  if (report.contains("graphs")) {
    for (const auto& g : report["graphs"]) graph[{g["problem_id"], g["model_id"]}] = g;
  }
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& [k, _] : traj) keys.insert(k);
  for (const auto& [k, _] : graph) keys.insert(k);

  auto num = [](const nlohmann::ordered_json& v) -> std::string {
    if (v.is_null()) return "";
    if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
    return detail::fmt_double(v.get<double>());
  };
  std::ostringstream out;
  out << "problem_id,model_id,m_plus,m_minus,n_correct_clusters,n_incorrect_clusters,nodes,edges";
  for (auto m : measures) out << ",beta_" << m << ",r2_" << m;
  for (auto k : metric_keys) out << ',' << k;
  for (auto l : graphlet_labels) out << ",prop_" << l;
  out << '\n';
  for (const auto& key : keys) {
    out << key.first << ',' << key.second;
    if (auto it = traj.find(key); it != traj.end()) {
      const auto& t = it->second;
      out << ',' << num(t["m_plus"]) << ',' << num(t["m_minus"]) << ',' << num(t["n_correct_clusters"]) << ','
          << num(t["n_incorrect_clusters"]);
    } else {
      out << ",,,,";
    }
    if (auto it = graph.find(key); it != graph.end()) {
      const auto& g = it->second;
      out << ',' << num(g["nodes"]) << ',' << num(g["edges"]);
      for (auto m : measures) {
        const auto& d = g["decay"][m];
        out << ',' << (d.contains("beta") ? num(d["beta"]) : "") << ','
            << (d.contains("r_squared") ? num(d["r_squared"]) : "");
      }
      for (auto k : metric_keys) out << ',' << (g["global_metrics"].is_null() ? "" : num(g["global_metrics"][k]));
      for (auto l : graphlet_labels) out << ',' << num(g["graphlets"]["proportions"][l]);
    } else {
      out << ",,";
      for (std::size_t i = 0; i < measures.size() * 2 + metric_keys.size() + graphlet_labels.size(); ++i) out << ',';
    }
    out << '\n';
  }
  return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

inline std::string file_stem_for(const std::string& problem, const std::string& model) {
  std::string s = problem + "__" + model;
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

/// Graph exports (GraphML, DOT, CSV) and rank-plot CSVs under `out_dir`.
inline void write_graph_outputs(const GraphFragment& f, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "graphs");
  std::filesystem::create_directories(out_dir / "rank_plots");
  for (const auto& g : f.graphs) {
    const auto stem = (out_dir / "graphs" / file_stem_for(g.problem_id, g.model_id)).string();
    export_graph(g, GraphFormat::graphml, stem);
    export_graph(g, GraphFormat::dot, stem);
    export_graph(g, GraphFormat::edge_csv, stem);
  }
  for (const auto& [key, series] : f.rank_series) {
    for (const auto& [m, s] : series) {
      std::ostringstream csv;
      csv << "rank,value,log10_value\n";
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        csv << (i + 1) << ',' << detail::fmt_double(s.values[i]) << ','
            << detail::fmt_double(std::log10(s.values[i])) << '\n';
      }
      write_text(out_dir / "rank_plots" / (file_stem_for(key.first, key.second) + "__" + to_string(m) + ".csv"),
                 csv.str());
    }
  }
}

inline std::string trajectories_csv(const TrajectoryFragment& f) {
  std::ostringstream out;
  out << "problem_id,model_id,m_plus,m_minus,n_correct_clusters,n_incorrect_clusters,threshold\n";
  for (const auto& t : f.counts) {
    out << t.problem_id << ',' << t.model_id << ',' << t.m_plus << ',' << t.m_minus << ',' << t.n_correct_clusters
        << ',' << t.n_incorrect_clusters << ',' << detail::fmt_double(t.threshold) << '\n';
  }
  return out.str();
}

inline std::string pass_at_k_csv(const TrajectoryFragment& f) {
  std::ostringstream out;
  out << "model_id,k,pass_at_k\n";
  for (const auto& [model, curve] : f.pass_at_k) {
    for (const auto& [k, v] : curve) out << model << ',' << k << ',' << detail::fmt_double(v) << '\n';
  }
  return out.str();
}

inline std::string graphlets_csv(const GraphFragment& f) {
  std::ostringstream out;
  out << "problem_id,model_id";
  for (auto l : graphlet_labels) out << ",count_" << l;
  for (auto l : graphlet_labels) out << ",prop_" << l;
  out << '\n';
  for (const auto& r : f.rows) {
    out << r.problem_id << ',' << r.model_id;
    for (auto c : r.graphlets.counts) out << ',' << c;
    for (auto p : r.graphlets.proportions) out << ',' << detail::fmt_double(p);
    out << '\n';
  }
  return out.str();
}

inline nlohmann::ordered_json manifest_json(const nlohmann::ordered_json& report) {
  nlohmann::ordered_json m;
  m["toolkit_version"] = toolkit_version;
  m["schema_version"] = report_schema_version;
  m["config_hash"] = report["config_hash"];
  m["report_hash"] = fnv1a_hex(report.dump());
  m["seed_derivation"] = "kmeans seed = splitmix64(seed ^ fnv1a64(\"kmeans\"))";
  return m;
}

/// Writes report.json, report.csv, manifest.json, stage CSVs and graph exports.
inline void write_report(const MetricsReport& r, const std::filesystem::path& out_dir) {
  const auto doc = to_json(r);
  write_text(out_dir / "report.json", doc.dump(2) + "\n");
  write_text(out_dir / "report.csv", report_csv(doc));
  write_text(out_dir / "manifest.json", manifest_json(doc).dump(2) + "\n");
  write_text(out_dir / "trajectories.csv", trajectories_csv(r.trajectories));
  write_text(out_dir / "passk.csv", pass_at_k_csv(r.trajectories));
  write_text(out_dir / "graphlets.csv", graphlets_csv(r.graphs));
  write_graph_outputs(r.graphs, out_dir);
}

}  // namespace reasonpath
