// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>

#include "generators.hpp"
#include "graph_helpers.hpp"
#include "oracles.hpp"
#include "reasonpath/reasonpath.hpp"

using namespace reasonpath;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0 && secs >= budget_s) {
    o.ok = false;
    o.detail += " over time budget";
  }
  std::printf("%s %-22s %7.2fs  %s\n", o.ok ? "PASS" : "FAIL", name, secs, o.detail.c_str());
  std::fflush(stdout);
  failures += o.ok ? 0 : 1;
}

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome chrf_oracle() {
  std::mt19937_64 rng(1001);
  double worst = 0;
  bool identity = true;
  for (int t = 0; t < 200; ++t) {
    const auto a = testgen::random_text(rng, 500);
    const auto b = t % 10 == 0 ? a : testgen::random_text(rng, 500);
    worst = std::max(worst, std::abs(chrf(a, b) - oracle::chrf(a, b)));
    identity = identity && chrf(a, a) == 1.0;
  }
  return {worst <= 1e-12 && identity, fmt("max |diff| %.3g", worst) + (identity ? ", identity exact" : ", identity FAILED")};
}

Outcome upgma_oracle() {
  std::mt19937_64 rng(1002);
  bool exact = true, monotone = true;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 24;
    const auto d = testgen::random_distances(rng, n);
    const auto dg = upgma(d, n);
    const auto want = oracle::upgma_naive(d, n);
    for (std::size_t k = 0; k < want.size(); ++k) {
      const auto& m = dg.merges[k];
      exact = exact && m.a == want[k].a && m.b == want[k].b && m.height == want[k].height && m.size == want[k].size;
    }
    std::size_t prev = n + 1;
    for (int i = 0; i <= 110; ++i) {
      const auto c = cut(dg, i / 100.0);
      monotone = monotone && c <= prev;
      prev = c;
    }
  }
  return {exact && monotone, std::string(exact ? "merges exact" : "merge mismatch") +
                                 (monotone ? ", cuts monotone" : ", cuts NOT monotone")};
}

Outcome passk() {
  std::mt19937_64 rng(1003);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const long n = 1 + static_cast<long>(rng() % 300);
    const long c = static_cast<long>(rng() % (n + 1));
    const long k = 1 + static_cast<long>(rng() % n);
    const double want = oracle::pass_at_k_exact(n, c, k);
    const double got = pass_at_k(n, c, k);
    const double rel = want == 0.0 ? std::abs(got) : std::abs(got - want) / want;
    worst = std::max(worst, rel);
  }
  int mc_ok = 0;
  for (int t = 0; t < 20; ++t) {
    const long n = 2 + static_cast<long>(rng() % 40);
    const long c = static_cast<long>(rng() % (n + 1));
    const long k = 1 + static_cast<long>(rng() % n);
    const double p = pass_at_k(n, c, k);
    const double mc = oracle::pass_at_k_monte_carlo(n, c, k, 100000, 5000 + t);
    const double se = std::sqrt(p * (1 - p) / 100000.0);
    mc_ok += std::abs(mc - p) <= 3 * se ? 1 : 0;
  }
  return {worst <= 1e-12 && mc_ok == 20,
          fmt("max rel err %.3g", worst) + ", Monte Carlo within 3 SE " + std::to_string(mc_ok) + "/20"};
}

Outcome betweenness_oracle() {
  std::mt19937_64 rng(1004);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const auto a = testutil::random_digraph(rng, n, 0.15 + 0.1 * (t % 6));
    const auto got = betweenness(testutil::from_adjacency(a));
    const auto want = oracle::betweenness_enumerate(a);
    for (int v = 0; v < n; ++v) worst = std::max(worst, std::abs(got.at(static_cast<NodeId>(v)) - want[v]));
  }
  return {worst <= 1e-12, fmt("max |diff| %.3g", worst)};
}

Outcome graphlet_oracle() {
  std::mt19937_64 rng(1005);
  int matches = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const auto a = testutil::random_graph(rng, n, 0.1 + 0.2 * (t % 5));
    matches += graphlet_census(testutil::from_adjacency(a)).counts == oracle::graphlets_bruteforce(a) ? 1 : 0;
  }
  const auto k4 = graphlet_census(testutil::from_adjacency(testutil::complete(4)));
  oracle::Adj c4(4, std::vector<int>(4, 0));
  for (int i = 0; i < 4; ++i) c4[i][(i + 1) % 4] = c4[(i + 1) % 4][i] = 1;
  const auto cyc = graphlet_census(testutil::from_adjacency(c4));
  const bool shapes = k4.total() == 1 && k4[Graphlet::complete] == 1 && cyc.total() == 1 && cyc[Graphlet::cycle] == 1;
  return {matches == 100 && shapes,
          std::to_string(matches) + "/100 exact" + (shapes ? ", K4 and C4 single shape" : ", K4/C4 FAILED")};
}

Outcome decay() {
  std::vector<double> x;
  for (int r = 1; r <= 20; ++r) x.push_back(std::pow(10.0, 2.0 - 0.5 * r));
  const auto f = fit_decay(x);
  const double err = std::abs(f.beta - 0.5);
  bool fit_ok = err <= 1e-9 && f.r_squared >= 1.0 - 1e-12;

  // Scaling that is exact in binary floating point must leave beta bitwise
  // unchanged: powers of two on real data, any integer factor on count data.
  std::mt19937_64 rng(1006);
  std::uniform_real_distribution<double> u(1e-3, 1e3);
  bool invariant = true;
  double inexact_worst = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(2 + rng() % 50), counts(v.size());
    for (auto& a : v) a = u(rng);
    for (auto& a : counts) a = static_cast<double>(1 + rng() % 500);
    const double base = fit_decay(v).beta, cbase = fit_decay(counts).beta;
    for (int e : {-30, -3, -1, 1, 5, 40}) {
      auto y = v;
      for (auto& a : y) a = std::ldexp(a, e);
      invariant = invariant && fit_decay(y).beta == base;
    }
    for (double c : {3.0, 7.0, 1000.0, 123457.0}) {
      auto y = counts;
      for (auto& a : y) a *= c;
      invariant = invariant && fit_decay(y).beta == cbase;
      auto z = v;
      for (auto& a : z) a *= c / 9.0;
      inexact_worst = std::max(inexact_worst, std::abs(fit_decay(z).beta - base));
    }
  }
  return {fit_ok && invariant, fmt("|beta-0.5| %.3g", err) + fmt(", r2 %.17g", f.r_squared) +
                                   (invariant ? ", exact scalings bitwise invariant" : ", scaling NOT invariant") +
                                   fmt(" (rounded scalings drift <= %.2g)", inexact_worst)};
}

Outcome global() {
  bool examples = true;
  double worst_l2 = 0;
  for (int n = 3; n <= 10; ++n) {
    const auto gm = global_metrics(testutil::from_adjacency(testutil::complete(n)));
    examples = examples && *gm.edge_density == 1.0;
    worst_l2 = std::max(worst_l2, std::abs(*gm.algebraic_connectivity - n));
  }
  const double apl = *global_metrics(testutil::from_adjacency(testutil::path_graph(10))).avg_path_length;
  examples = examples && worst_l2 <= 1e-8 && std::abs(apl - 11.0 / 3.0) <= 1e-12;

  std::mt19937_64 rng(1007);
  double worst = 0;
  bool presence = true;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng() % 19);
    const auto a = testutil::random_graph(rng, n, 0.1 + 0.15 * (t % 5));
    const auto g = testutil::from_adjacency(a);
    const auto got = global_metrics(g);
    const auto want = oracle::global_metrics(a, greedy_modularity_partition(undirected_projection(g)));
    const std::pair<std::optional<double>, std::optional<double>> fields[] = {
        {got.edge_density, want.edge_density},
        {got.clustering_coefficient_norm, want.clustering_coefficient_norm},
        {got.assortativity, want.assortativity},
        {got.modularity, want.modularity},
        {got.freeman_centralization, want.freeman_centralization},
        {got.avg_path_length_norm, want.avg_path_length_norm},
        {got.global_efficiency, want.global_efficiency},
        {got.algebraic_connectivity, want.algebraic_connectivity},
        {got.small_world_sigma, want.small_world_sigma}};
    for (const auto& [x, y] : fields) {
      presence = presence && x.has_value() == y.has_value();
      if (x && y) worst = std::max(worst, std::abs(*x - *y));
    }
  }
  return {examples && presence && worst <= 1e-9,
          fmt("|l2(Kn)-n| %.3g", worst_l2) + fmt(", APL(P10) %.17g", apl) + fmt(", 9 fields max |diff| %.3g", worst) +
              (presence ? "" : ", presence mismatch")};
}

Outcome kmeans() {
  std::mt19937_64 rng(1008);
  bool monotone = true;
  for (int t = 0; t < 30; ++t) {
    const auto pts = testgen::random_points(rng, 300, 5);
    KMeansOptions opt;
    opt.k = 2 + t % 12;
    opt.n_init = 1;
    opt.tol = 0.0;
    opt.seed = static_cast<std::uint64_t>(t);
    const auto m = kmeans_fit(pts, opt);
    for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
      monotone = monotone && m.inertia_history[i] <= m.inertia_history[i - 1];
    }
  }

  const auto [pts, truth] = testgen::blobs(42);
  KMeansOptions bopt;
  bopt.k = 3;
  bopt.seed = 42;
  const auto bm = kmeans_fit(pts, bopt);
  std::map<std::size_t, int> node_blob;
  bool recovered = true;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto [it, fresh] = node_blob.emplace(nearest_centroid(bm, pts[i]), truth[i]);
    recovered = recovered && it->second == truth[i];
  }
  recovered = recovered && node_blob.size() == 3;

  const auto big = testgen::random_points(rng, 3000, 8);
  KMeansOptions dopt;
  dopt.k = 30;
  dopt.seed = 9;
  const auto a = kmeans_fit(big, dopt);
  const auto b = kmeans_fit(big, dopt);
  dopt.threads = 8;
  const auto c = kmeans_fit(big, dopt);
  const bool bitwise = a.centroids == b.centroids && a.centroids == c.centroids && a.inertia == c.inertia &&
                       a.inertia_history == c.inertia_history;
  return {monotone && recovered && bitwise, std::string(monotone ? "inertia non-increasing" : "inertia INCREASED") +
                                                (recovered ? ", blobs exact" : ", blobs NOT recovered") +
                                                (bitwise ? ", bitwise deterministic" : ", NOT deterministic")};
}

Outcome segmentation() {
  const auto a = segment("A.B");
  std::string twelve;
  for (int i = 0; i < 12; ++i) twelve += (i ? " w" : "w") + std::to_string(i);
  const auto b = segment(twelve);
  std::string eleven;
  for (int i = 0; i < 11; ++i) eleven += (i ? " w" : "w") + std::to_string(i);
  const auto c = segment(eleven + ". " + eleven + ".");
  const bool rules = a.size() == 1 && b.size() == 1 && b[0].approx_tokens == 12 && c.size() == 2;

  std::mt19937_64 rng(1009);
  int held = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto text = testgen::random_trace(rng);
    const auto truncated = truncate_at_think(text);
    const auto cs = segment(text);
    const auto again = segment(testgen::joined_spans(truncated, cs));
    bool ok = testgen::joined_spans(truncated, cs) == truncated && again.size() == cs.size();
    std::string concat, concat_again;
    for (std::size_t i = 0; ok && i < cs.size(); ++i) {
      ok = again[i].text == cs[i].text;
      concat += cs[i].text;
    }
    ok = ok && testgen::strip_ws(concat) == testgen::strip_ws(truncated);
    held += ok ? 1 : 0;
  }
  return {rules && held == 1000, std::string(rules ? "rule examples hold" : "rule examples FAILED") +
                                     ", idempotence " + std::to_string(held) + "/1000"};
}

Outcome end_to_end() {
  const fs::path dir = REASONPATH_FIXTURE_DIR;
  const auto cfg = load_config((dir / "config.json").string());
  const auto corpus = load_corpus(cfg);
  const auto r1 = run_all(corpus, cfg);
  const auto r2 = run_all(load_corpus(cfg), cfg);
  const bool identical = to_json(r1).dump(2) == to_json(r2).dump(2) && report_csv(to_json(r1)) == report_csv(to_json(r2));

  std::map<std::string, std::size_t> clusters;
  for (const auto& t : r1.trajectories.counts) clusters[t.model_id] += t.n_correct_clusters + t.n_incorrect_clusters;
  bool fewer = clusters["squeezed"] < clusters["expanded"];

  std::map<std::pair<std::string, std::string>, const GraphRow*> rows;
  for (const auto& row : r1.graphs.rows) rows[{row.problem_id, row.model_id}] = &row;
  bool steeper = !rows.empty();
  double margin = 1e300;
  for (const auto& [key, row] : rows) {
    if (key.second != "squeezed") continue;
    const auto* ex = rows.at({key.first, "expanded"});
    for (const auto& [m, fit] : row->decay) {
      const auto& other = ex->decay.at(m);
      steeper = steeper && fit && other && fit->beta > other->beta;
      if (fit && other) margin = std::min(margin, fit->beta - other->beta);
    }
  }
  return {fewer && steeper && identical,
          "clusters squeezed " + std::to_string(clusters["squeezed"]) + " vs expanded " +
              std::to_string(clusters["expanded"]) + fmt(", min beta margin %.4g", margin) +
              (identical ? ", reruns byte-identical" : ", reruns DIFFER")};
}

}  // namespace

int main() {
  report("chrf-oracle", 5, chrf_oracle);
  report("upgma-oracle", 10, upgma_oracle);
  report("pass-at-k", 0, passk);
  report("betweenness", 0, betweenness_oracle);
  report("graphlet-census", 30, graphlet_oracle);
  report("decay-fit", 0, decay);
  report("global-metrics", 0, global);
  report("kmeans", 0, kmeans);
  report("segmentation", 0, segmentation);
  report("end-to-end", 120, end_to_end);
  return failures;
}
