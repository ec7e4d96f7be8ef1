#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "reasonpath/reasonpath.hpp"

namespace fs = std::filesystem;
using namespace reasonpath;
using nlohmann::ordered_json;

namespace {

struct Overrides {
  std::string config, corpus, problems, embeddings, out, metric, embed_source, embed_url, ks;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<std::size_t> k;
  std::optional<unsigned> threads;
  std::string traj_fragment, graph_fragment;
};

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  std::stringstream ss(s);
  for (std::string x; std::getline(ss, x, ',');) {
    try {
      std::size_t used = 0;
      ks.push_back(std::stoi(x, &used));
      if (used != x.size()) throw std::invalid_argument(x);
    } catch (const std::exception&) {
      throw ConfigError("--ks: '" + x + "' is not an integer");
    }
  }
  return ks;
}

RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  if (!o.corpus.empty()) c.corpus_path = o.corpus;
  if (!o.problems.empty()) c.problems_path = o.problems;
  if (!o.embeddings.empty()) c.embeddings_path = o.embeddings;
  if (!o.out.empty()) c.out_dir = o.out;
  if (!o.metric.empty()) c.metric = detail::parse_metric(o.metric);
  if (!o.embed_source.empty()) c.embed_source = detail::parse_embed_source(o.embed_source);
  if (!o.embed_url.empty()) c.embed_url = o.embed_url;
  if (!o.ks.empty()) c.ks = parse_ks(o.ks);
  if (o.seed) c.seed = *o.seed;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.k) c.k = *o.k;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

ordered_json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path + ": " + e.what());
  }
}

// Runs `fn`, prefixing any toolkit error with the stage name.
template <class F>
auto stage(const char* name, F&& fn) {
  spdlog::info("stage {}", name);
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  }
}

void cmd_ingest(const RunConfig& c) {
  const auto corpus = stage("ingest", [&] { return load_corpus(c); });
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  write_jsonl(corpus, (out / "corpus.jsonl").string());
  for (const auto& [p, m] : corpus.keys()) {
    const auto [ok, bad] = split_by_correctness(corpus, p, m);
    std::cout << p << '\t' << m << "\tM+=" << ok.size() << "\tM-=" << bad.size() << '\n';
  }
}

void cmd_trajectories(const RunConfig& c) {
  const auto corpus = stage("ingest", [&] { return load_corpus(c); });
  const auto f = stage("trajectories", [&] { return run_trajectories(corpus, c); });
  ordered_json j;
  j["config"] = to_json(c);
  j.update(to_json(f));
  write_text(fs::path(c.out_dir) / "trajectories.json", j.dump(2) + "\n");
  write_text(fs::path(c.out_dir) / "trajectories.csv", trajectories_csv(f));
  write_text(fs::path(c.out_dir) / "passk.csv", pass_at_k_csv(f));
}

void cmd_passk(const RunConfig& c) {
  const auto corpus = stage("ingest", [&] { return load_corpus(c); });
  TrajectoryFragment f;
  stage("passk", [&] {
    const auto ks = c.ks.empty() ? default_ks(corpus) : c.ks;
    for (const auto& model : corpus.models()) f.pass_at_k[model] = pass_at_k_curve(corpus, model, ks);
    return 0;
  });
  const auto csv = pass_at_k_csv(f);
  write_text(fs::path(c.out_dir) / "passk.csv", csv);
  std::cout << csv;
}

void cmd_segment(const RunConfig& c) {
  const auto corpus = stage("ingest", [&] { return load_corpus(c); });
  const auto chunks = stage("segment", [&] { return segment_corpus(corpus, c); });
  std::ostringstream out;
  for (const auto& ch : chunks) {
    out << ordered_json{{"problem_id", ch.ref.problem_id}, {"model_id", ch.ref.model_id},
                        {"sample_index", ch.ref.sample_index}, {"position", ch.position},
                        {"text", ch.text}, {"approx_tokens", ch.approx_tokens}}
               .dump()
        << '\n';
  }
  write_text(fs::path(c.out_dir) / "chunks.jsonl", out.str());
  spdlog::info("{} chunks", chunks.size());
}

void cmd_embed(const RunConfig& c) {
  const auto corpus = stage("ingest", [&] { return load_corpus(c); });
  const auto chunks = stage("segment", [&] { return segment_corpus(corpus, c); });
  auto vectors = stage("embed", [&] { return embed_chunks(chunks, c); });
  std::vector<EmbeddedSentence> es;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    es.push_back({ChunkRef{chunks[i].ref, chunks[i].position}, std::move(vectors[i])});
  }
  fs::create_directories(c.out_dir);
  write_embeddings(es, (fs::path(c.out_dir) / "embeddings.jsonl").string());
}

GraphFragment graphs_for(const RunConfig& c) {
  const auto corpus = stage("ingest", [&] { return load_corpus(c); });
  return stage("graphs", [&] { return run_graphs(corpus, c); });
}

void cmd_graph(const RunConfig& c) { write_graph_outputs(graphs_for(c), c.out_dir); }

void cmd_metrics(const RunConfig& c) {
  const auto f = graphs_for(c);
  ordered_json j;
  j["config"] = to_json(c);
  j.update(to_json(f));
  write_text(fs::path(c.out_dir) / "graphs.json", j.dump(2) + "\n");
  write_graph_outputs(f, c.out_dir);
}

void cmd_graphlets(const RunConfig& c) {
  const auto csv = graphlets_csv(graphs_for(c));
  write_text(fs::path(c.out_dir) / "graphlets.csv", csv);
  std::cout << csv;
}

void cmd_report(const Overrides& o) {
  if (o.traj_fragment.empty() || o.graph_fragment.empty()) {
    throw ConfigError("report needs --trajectories-fragment and --graphs-fragment");
  }
  auto traj = read_json(o.traj_fragment);
  auto graphs = read_json(o.graph_fragment);
  if (traj.value("config", ordered_json()) != graphs.value("config", ordered_json())) {
    throw ConfigError("fragments were produced with different configs");
  }
  const auto config = traj["config"];
  traj.erase("config");
  graphs.erase("config");
  const auto doc = merge_fragments(config, traj, graphs);
  const fs::path out = o.out.empty() ? fs::path("out") : fs::path(o.out);
  write_text(out / "report.json", doc.dump(2) + "\n");
  write_text(out / "report.csv", report_csv(doc));
  write_text(out / "manifest.json", manifest_json(doc).dump(2) + "\n");
}

void cmd_all(const RunConfig& c) {
  const auto corpus = stage("ingest", [&] { return load_corpus(c); });
  MetricsReport r;
  r.config = to_json(c);
  r.config_hash = fnv1a_hex(r.config.dump());
  r.trajectories = stage("trajectories", [&] { return run_trajectories(corpus, c); });
  r.graphs = stage("graphs", [&] { return run_graphs(corpus, c); });
  write_report(r, c.out_dir);
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::transport: return 4;
  }
  return 1;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("reasonpath");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("REASONPATH_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Reasoning-trace analysis toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", toolkit_version);
  Overrides o;
  app.add_option("--config", o.config, "JSON config file");
  app.add_option("--corpus", o.corpus, "corpus JSONL");
  app.add_option("--problems", o.problems, "problems JSONL with gold answers");
  app.add_option("--embeddings", o.embeddings, "embeddings JSONL (embed-source=file)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "run seed");
  app.add_option("--threshold", o.threshold, "UPGMA cut distance");
  app.add_option("--k", o.k, "K-means cluster count");
  app.add_option("--metric", o.metric, "chrf or bleu")->check(CLI::IsMember({"chrf", "bleu"}));
  app.add_option("--embed-source", o.embed_source, "file or service")->check(CLI::IsMember({"file", "service"}));
  app.add_option("--embed-url", o.embed_url, "embedding service base URL");
  app.add_option("--ks", o.ks, "pass@k values, e.g. 1,2,4");
  app.add_option("--threads", o.threads, "worker threads");

  std::map<std::string, std::function<void(const RunConfig&)>> commands{
      {"ingest", cmd_ingest},   {"trajectories", cmd_trajectories}, {"segment", cmd_segment},
      {"embed", cmd_embed},     {"graph", cmd_graph},               {"metrics", cmd_metrics},
      {"graphlets", cmd_graphlets}, {"passk", cmd_passk},           {"all", cmd_all}};
  const std::map<std::string, std::string> help{
      {"ingest", "validate and label the corpus"},
      {"trajectories", "count unique trajectory clusters"},
      {"segment", "split traces into reasoning steps"},
      {"embed", "embed reasoning steps"},
      {"graph", "build and export reasoning graphs"},
      {"metrics", "graph metrics fragment"},
      {"graphlets", "4-node graphlet census"},
      {"passk", "pass@k curves"},
      {"all", "full pipeline and report"}};
  for (const auto& [name, _] : commands) app.add_subcommand(name, help.at(name))->fallthrough();
  auto* report = app.add_subcommand("report", "merge fragments into a report")->fallthrough();
  report->add_option("--trajectories-fragment", o.traj_fragment, "trajectories.json");
  report->add_option("--graphs-fragment", o.graph_fragment, "graphs.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (report->parsed()) {
      cmd_report(o);
      return 0;
    }
    const auto cfg = resolve(o);
    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) fn(cfg);
    }
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
