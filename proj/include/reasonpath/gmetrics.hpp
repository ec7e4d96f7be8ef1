#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reasonpath/error.hpp"
#include "reasonpath/rgraph.hpp"

namespace reasonpath {

// ---------------------------------------------------------------------------
// Graph views

/// Undirected simple graph on dense indices 0..n-1 with sorted adjacency.
struct UndirectedGraph {
  std::vector<NodeId> ids;                     // dense index -> node id
  std::vector<std::vector<std::size_t>> adj;   // sorted, no loops, no duplicates
  std::size_t edge_count = 0;

  std::size_t size() const { return adj.size(); }

  static UndirectedGraph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
    UndirectedGraph g;
    g.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.ids[i] = i;
    g.adj.assign(n, {});
    for (auto [u, v] : edges) {
      if (u == v) continue;
      if (u >= n || v >= n) throw ValidationError("from_edges: endpoint out of range");
      g.adj[u].push_back(v);
      g.adj[v].push_back(u);
    }
    for (auto& a : g.adj) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
      g.edge_count += a.size();
    }
    g.edge_count /= 2;
    return g;
  }
};

inline std::map<NodeId, std::size_t> dense_index(const ReasoningGraph& g) {
  std::map<NodeId, std::size_t> idx;
  for (const auto& [v, _] : g.visits) idx.emplace(v, idx.size());
  for (const auto& [uv, _] : g.edges) {
    idx.emplace(uv.first, 0);
    idx.emplace(uv.second, 0);
  }
  std::size_t i = 0;
  for (auto& [_, d] : idx) d = i++;
  return idx;
}

/// Undirected simple projection of a reasoning graph (u->v and v->u collapse).
inline UndirectedGraph undirected_projection(const ReasoningGraph& g) {
  const auto idx = dense_index(g);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [uv, _] : g.edges) edges.emplace_back(idx.at(uv.first), idx.at(uv.second));
  auto u = UndirectedGraph::from_edges(idx.size(), edges);
  for (const auto& [v, i] : idx) u.ids[i] = v;
  return u;
}

/// Out-neighbour lists on the dense indices of dense_index(g).
inline std::vector<std::vector<std::size_t>> directed_adjacency(const ReasoningGraph& g) {
  const auto idx = dense_index(g);
  std::vector<std::vector<std::size_t>> out(idx.size());
  for (const auto& [uv, _] : g.edges) out[idx.at(uv.first)].push_back(idx.at(uv.second));
  for (auto& a : out) std::sort(a.begin(), a.end());
  return out;
}

// ---------------------------------------------------------------------------
// Node measures

/// n(v) / sum_u n(u).
inline std::map<NodeId, double> visitation_frequency(const ReasoningGraph& g) {
  if (g.visits.empty()) throw DomainError("visitation_frequency: empty graph");
  double total = 0.0;
  for (const auto& [_, c] : g.visits) total += static_cast<double>(c);
  if (total <= 0.0) throw DomainError("visitation_frequency: graph has no visits");
  std::map<NodeId, double> out;
  for (const auto& [v, c] : g.visits) out[v] = static_cast<double>(c) / total;
  return out;
}

/// Number of distinct neighbours, ignoring edge direction.
inline std::map<NodeId, std::size_t> degree(const ReasoningGraph& g) {
  const auto u = undirected_projection(g);
  std::map<NodeId, std::size_t> out;
  for (std::size_t i = 0; i < u.size(); ++i) out[u.ids[i]] = u.adj[i].size();
  return out;
}

namespace detail {

// Brandes' accumulation with BFS shortest paths; returns the unnormalized sum
// over ordered pairs (s, t) of sigma_st(v) / sigma_st.
inline std::vector<double> brandes(const std::vector<std::vector<std::size_t>>& out) {
  const std::size_t n = out.size();
  std::vector<double> bc(n, 0.0);
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::deque<std::size_t> q{s};
    while (!q.empty()) {
      const auto v = q.front();
      q.pop_front();
      order.push_back(v);
      for (auto w : out[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) bc[w] += delta[w];
    }
  }
  return bc;
}

}  // namespace detail

enum class BetweennessMode { directed, undirected };

/// Shortest-path (edge count) betweenness scaled by 1/((|V|-1)(|V|-2)).
/// Graphs with fewer than three nodes give all zeros.
inline std::map<NodeId, double> betweenness(const ReasoningGraph& g,
                                            BetweennessMode mode = BetweennessMode::directed) {
  const auto idx = dense_index(g);
  std::vector<std::vector<std::size_t>> adj;
  if (mode == BetweennessMode::directed) {
    adj = directed_adjacency(g);
  } else {
    adj = undirected_projection(g).adj;
  }
  const auto n = adj.size();
  std::map<NodeId, double> out;
  if (n < 3) {
    for (const auto& [v, _] : idx) out[v] = 0.0;
    return out;
  }
  const auto raw = detail::brandes(adj);
  const double scale = 1.0 / (static_cast<double>(n - 1) * static_cast<double>(n - 2));
  for (const auto& [v, i] : idx) out[v] = raw[i] * scale;
  return out;
}

// ---------------------------------------------------------------------------
// Rank distributions and decay fits

enum class RankMeasure { visitation_frequency, degree, betweenness };

inline const char* to_string(RankMeasure m) {
  switch (m) {
    case RankMeasure::visitation_frequency: return "visitation_frequency";
    case RankMeasure::degree: return "degree";
    case RankMeasure::betweenness: return "betweenness";
  }
  return "?";
}

/// Positive values sorted descending; value i has rank i + 1.
struct RankSeries {
  RankMeasure measure = RankMeasure::visitation_frequency;
  std::vector<double> values;
};

inline std::vector<double> ranked_positive(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values) {
    if (x > 0.0) v.push_back(x);
  }
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

template <class Map>
RankSeries rank_series(RankMeasure measure, const Map& by_node) {
  std::vector<double> v;
  for (const auto& [_, x] : by_node) v.push_back(static_cast<double>(x));
  return {measure, ranked_positive(v)};
}

struct DecayFit {
  double beta = 0.0;
  double alpha = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Inclusive 1-based rank window.
struct RankRange {
  std::size_t first = 1;
  std::size_t last = std::numeric_limits<std::size_t>::max();
};

/// OLS fit of log10 X(R) = alpha - beta R over descending ranks of the
/// positive values. Logs are taken of ratios to the largest value, so beta
/// depends on the values only through their ratios.
inline DecayFit fit_decay(std::span<const double> values, std::optional<RankRange> range = {}) {
  const auto ranked = ranked_positive(values);
  std::vector<double> xs, ys;
  const auto lo = range ? range->first : 1;
  const auto hi = range ? range->last : ranked.size();
  if (!ranked.empty()) {
    for (std::size_t r = std::max<std::size_t>(lo, 1); r <= std::min(hi, ranked.size()); ++r) {
      xs.push_back(static_cast<double>(r));
      ys.push_back(std::log10(ranked[r - 1] / ranked[0]));
    }
  }
  if (xs.size() < 2) throw FitError("fit_decay: need at least two positive values in range");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  DecayFit f;
  f.beta = slope == 0.0 ? 0.0 : -slope;
  f.alpha = std::log10(ranked[0]) + (my - slope * mx);
  f.n_points = xs.size();
  if (syy == 0.0) {
    f.r_squared = 1.0;
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = ys[i] - (my + slope * (xs[i] - mx));
      ss_res += e * e;
    }
    f.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return f;
}

inline DecayFit fit_decay(const RankSeries& s, std::optional<RankRange> range = {}) {
  return fit_decay(std::span<const double>(s.values), range);
}

// ---------------------------------------------------------------------------
// Community partition and modularity

/// Greedy agglomerative modularity maximization (Clauset-Newman-Moore).
/// Gains are compared exactly in integer units; ties go to the
/// lexicographically smallest community-id pair, and a merged community keeps
/// the smaller id. Returns a community label per dense node index, numbered
/// by first appearance.
inline std::vector<std::size_t> greedy_modularity_partition(const UndirectedGraph& g) {
  const std::size_t n = g.size();
  const auto two_m = static_cast<std::int64_t>(2 * g.edge_count);
  std::vector<std::size_t> owner(n);
  std::vector<std::int64_t> deg(n);
  std::vector<std::map<std::size_t, std::int64_t>> links(n);  // community -> edges between
  std::vector<char> alive(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    owner[i] = i;
    deg[i] = static_cast<std::int64_t>(g.adj[i].size());
    for (auto j : g.adj[i]) links[i][j] = 1;
  }
  while (two_m > 0) {
    // Gain of merging a and b is proportional to 2m * l_ab - d_a * d_b.
    std::int64_t best = 0;
    std::size_t ba = n, bb = n;
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      for (const auto& [b, l] : links[a]) {
        if (b <= a) continue;
        const std::int64_t gain = two_m * l - deg[a] * deg[b];
        if (gain > best) {
          best = gain;
          ba = a;
          bb = b;
        }
      }
    }
    if (ba == n) break;
    for (const auto& [c, l] : links[bb]) {
      if (c == ba) continue;
      links[ba][c] += l;
      auto& back = links[c];
      back.erase(bb);
      back[ba] += l;
    }
    links[ba].erase(bb);
    links[bb].clear();
    deg[ba] += deg[bb];
    alive[bb] = 0;
    for (auto& o : owner) {
      if (o == bb) o = ba;
    }
  }
  std::map<std::size_t, std::size_t> relabel;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = relabel.emplace(owner[i], relabel.size()).first->second;
  }
  return out;
}

/// Q = sum_c [ L_c / m - (D_c / 2m)^2 ] for a given partition.
inline double modularity(const UndirectedGraph& g, std::span<const std::size_t> community) {
  if (g.edge_count == 0) throw DomainError("modularity: graph has no edges");
  const double m = static_cast<double>(g.edge_count);
  std::map<std::size_t, std::pair<double, double>> per;  // internal edges, degree sum
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto& [inner, dsum] = per[community[i]];
    dsum += static_cast<double>(g.adj[i].size());
    for (auto j : g.adj[i]) {
      if (j > i && community[j] == community[i]) inner += 1.0;
    }
  }
  double q = 0.0;
  for (const auto& [_, p] : per) {
    const double frac = p.second / (2.0 * m);
    q += p.first / m - frac * frac;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Global metrics

struct GlobalMetricsOptions {
  std::size_t dense_eigen_limit = 4096;
  double iterative_tol = 1e-8;
  std::size_t iterative_max_iter = 1000000;
};

/// Undirected-projection topology metrics. Fields that are undefined for a
/// graph are left empty and explained in `absent`.
struct GlobalMetrics {
  std::optional<double> edge_density;
  std::optional<double> clustering_coefficient_norm;
  std::optional<double> assortativity;
  std::optional<double> modularity;
  std::optional<double> freeman_centralization;
  std::optional<double> avg_path_length_norm;
  std::optional<double> global_efficiency;
  std::optional<double> algebraic_connectivity;
  std::optional<double> small_world_sigma;

  // Unnormalized values and diagnostics.
  std::optional<double> clustering_coefficient;
  std::optional<double> avg_path_length;
  double disconnected_pair_fraction = 0.0;
  std::size_t communities = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::map<std::string, std::string> absent;
};

namespace detail {

// BFS hop distances from s; -1 when unreachable.
inline std::vector<long> bfs_hops(const UndirectedGraph& g, std::size_t s) {
  std::vector<long> d(g.size(), -1);
  d[s] = 0;
  std::deque<std::size_t> q{s};
  while (!q.empty()) {
    auto v = q.front();
    q.pop_front();
    for (auto w : g.adj[v]) {
      if (d[w] < 0) {
        d[w] = d[v] + 1;
        q.push_back(w);
      }
    }
  }
  return d;
}

// Component label per node; components numbered by smallest member.
inline std::vector<std::size_t> components(const UndirectedGraph& g) {
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> comp(g.size(), none);
  std::size_t next = 0;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (comp[s] != none) continue;
    std::deque<std::size_t> q{s};
    comp[s] = next;
    while (!q.empty()) {
      auto v = q.front();
      q.pop_front();
      for (auto w : g.adj[v]) {
        if (comp[w] == none) {
          comp[w] = next;
          q.push_back(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

// Second-smallest Laplacian eigenvalue of a connected graph by power
// iteration on (c I - L) restricted to the complement of the constant vector.
inline double fiedler_value_iterative(const UndirectedGraph& g, double tol, std::size_t max_iter) {
  const std::size_t n = g.size();
  std::size_t dmax = 0;
  for (const auto& a : g.adj) dmax = std::max(dmax, a.size());
  const double c = 2.0 * static_cast<double>(dmax) + 1.0;
  Eigen::VectorXd x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[static_cast<Eigen::Index>(i)] = std::sin(1.0 + static_cast<double>(i)) + 0.5 * std::cos(3.0 * static_cast<double>(i));
  }
  auto project = [&](Eigen::VectorXd& v) {
    v.array() -= v.mean();
    v.normalize();
  };
  project(x);
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double lx = static_cast<double>(g.adj[i].size()) * x[static_cast<Eigen::Index>(i)];
      for (auto j : g.adj[i]) lx -= x[static_cast<Eigen::Index>(j)];
      y[static_cast<Eigen::Index>(i)] = c * x[static_cast<Eigen::Index>(i)] - lx;
    }
    const double mu = x.dot(y);
    lambda = c - mu;
    // Eigenvalue error is about residual^2 / gap, so a residual test is far
    // safer than watching the Rayleigh quotient settle.
    const bool done = (y - mu * x).norm() < tol * c;
    project(y);
    x.swap(y);
    if (done) break;
  }
  return std::max(0.0, lambda);
}

}  // namespace detail

inline double algebraic_connectivity(const UndirectedGraph& g, const GlobalMetricsOptions& opt = {}) {
  const std::size_t n = g.size();
  if (n < 2) throw DomainError("algebraic_connectivity: need at least two nodes");
  const auto comp = detail::components(g);
  if (*std::max_element(comp.begin(), comp.end()) > 0) return 0.0;
  if (n > opt.dense_eigen_limit) {
    return detail::fiedler_value_iterative(g, opt.iterative_tol, opt.iterative_max_iter);
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    lap(ii, ii) = static_cast<double>(g.adj[i].size());
    for (auto j : g.adj[i]) lap(ii, static_cast<Eigen::Index>(j)) = -1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()[1]);
}

/// Degree assortativity: Pearson correlation of endpoint degrees over edges,
/// each edge counted in both directions. Empty when the degree variance over
/// edge ends is zero.
inline std::optional<double> degree_assortativity(const UndirectedGraph& g) {
  if (g.edge_count == 0) return std::nullopt;
  double mean = 0.0, count = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k = static_cast<double>(g.adj[i].size());
    mean += k * k;  // node i appears as an edge end k times
    count += k;
  }
  mean /= count;
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ki = static_cast<double>(g.adj[i].size()) - mean;
    for (auto j : g.adj[i]) {
      cov += ki * (static_cast<double>(g.adj[j].size()) - mean);
      var += ki * ki;
    }
  }
  if (var <= 1e-12 * count) return std::nullopt;
  return cov / var;
}

inline GlobalMetrics global_metrics(const UndirectedGraph& g, const GlobalMetricsOptions& opt = {}) {
  const std::size_t n = g.size();
  if (n == 0) throw DomainError("global_metrics: empty graph");
  GlobalMetrics gm;
  gm.nodes = n;
  gm.edges = g.edge_count;
  const double nd = static_cast<double>(n);
  const double m = static_cast<double>(g.edge_count);
  const double mean_degree = 2.0 * m / nd;

  gm.edge_density = n >= 2 ? 2.0 * m / (nd * (nd - 1.0)) : 0.0;

  // Clustering: t_i counts each triangle through i twice.
  double c_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = g.adj[i];
    const double k = static_cast<double>(a.size());
    if (a.size() < 2) continue;
    std::size_t links = 0;
    for (std::size_t x = 0; x < a.size(); ++x) {
      for (std::size_t y = x + 1; y < a.size(); ++y) {
        links += std::binary_search(g.adj[a[x]].begin(), g.adj[a[x]].end(), a[y]) ? 1 : 0;
      }
    }
    c_sum += 2.0 * static_cast<double>(links) / (k * (k - 1.0));
  }
  gm.clustering_coefficient = c_sum / nd;
  if (g.edge_count > 0) {
    gm.clustering_coefficient_norm = *gm.clustering_coefficient / (mean_degree / nd);
  } else {
    gm.absent["clustering_coefficient_norm"] = "no_edges";
  }

  if (auto r = degree_assortativity(g)) {
    gm.assortativity = r;
  } else {
    gm.absent["assortativity"] = g.edge_count == 0 ? "no_edges" : "zero_degree_variance";
  }

  if (g.edge_count > 0) {
    const auto part = greedy_modularity_partition(g);
    gm.communities = *std::max_element(part.begin(), part.end()) + 1;
    gm.modularity = modularity(g, part);
  } else {
    gm.communities = n;
    gm.absent["modularity"] = "no_edges";
  }

  if (n >= 3) {
    std::size_t dmax = 0;
    for (const auto& a : g.adj) dmax = std::max(dmax, a.size());
    double s = 0.0;
    for (const auto& a : g.adj) s += static_cast<double>(dmax - a.size());
    gm.freeman_centralization = s / ((nd - 1.0) * (nd - 2.0));
  } else {
    gm.absent["freeman_centralization"] = "fewer_than_3_nodes";
  }

  // Path-based metrics.
  const auto comp = detail::components(g);
  std::vector<std::size_t> comp_size(n, 0);
  for (auto c : comp) ++comp_size[c];
  const auto largest = static_cast<std::size_t>(
      std::max_element(comp_size.begin(), comp_size.end()) - comp_size.begin());
  if (n >= 2) {
    double inv_sum = 0.0, lcc_sum = 0.0;
    std::size_t unreachable = 0;
    for (std::size_t s = 0; s < n; ++s) {
      const auto d = detail::bfs_hops(g, s);
      for (std::size_t t = 0; t < n; ++t) {
        if (t == s) continue;
        if (d[t] < 0) {
          ++unreachable;
          continue;
        }
        inv_sum += 1.0 / static_cast<double>(d[t]);
        if (comp[s] == largest) lcc_sum += static_cast<double>(d[t]);
      }
    }
    const double pairs = nd * (nd - 1.0);
    gm.global_efficiency = inv_sum / pairs;
    gm.disconnected_pair_fraction = static_cast<double>(unreachable) / pairs;
    const double nl = static_cast<double>(comp_size[largest]);
    if (comp_size[largest] >= 2) {
      gm.avg_path_length = lcc_sum / (nl * (nl - 1.0));
    } else {
      gm.absent["avg_path_length"] = "no_connected_pairs";
    }
  } else {
    gm.absent["global_efficiency"] = "fewer_than_2_nodes";
    gm.absent["avg_path_length"] = "fewer_than_2_nodes";
  }
  if (gm.avg_path_length && n >= 2 && mean_degree > 1.0) {
    const double l_rand = std::log(nd) / std::log(mean_degree);
    gm.avg_path_length_norm = *gm.avg_path_length / l_rand;
  } else {
    gm.absent["avg_path_length_norm"] =
        gm.avg_path_length ? "mean_degree_at_most_1" : gm.absent["avg_path_length"];
  }

  if (n >= 2) {
    gm.algebraic_connectivity = algebraic_connectivity(g, opt);
  } else {
    gm.absent["algebraic_connectivity"] = "fewer_than_2_nodes";
  }

  if (gm.clustering_coefficient_norm && gm.avg_path_length_norm && *gm.avg_path_length_norm > 0.0) {
    gm.small_world_sigma = *gm.clustering_coefficient_norm / *gm.avg_path_length_norm;
  } else {
    gm.absent["small_world_sigma"] = "normalized_inputs_missing";
  }
  return gm;
}

inline GlobalMetrics global_metrics(const ReasoningGraph& g, const GlobalMetricsOptions& opt = {}) {
  if (g.empty()) throw DomainError("global_metrics: empty graph");
  return global_metrics(undirected_projection(g), opt);
}

// ---------------------------------------------------------------------------
// 4-node graphlets

/// Induced connected 4-node subgraph classes, in G3..G8 order.
enum class Graphlet { path = 0, star, paw, cycle, diamond, complete };

inline constexpr std::array<const char*, 6> graphlet_labels{"G3", "G4", "G5", "G6", "G7", "G8"};
inline constexpr std::array<const char*, 6> graphlet_shapes{"path", "star", "paw", "cycle", "diamond", "complete"};

struct GraphletCensus {
  std::array<std::uint64_t, 6> counts{};
  std::array<double, 6> proportions{};

  std::uint64_t operator[](Graphlet g) const { return counts[static_cast<std::size_t>(g)]; }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

/// Counts induced 4-node graphlets without enumerating 4-sets: non-induced
/// counts of each shape come from degrees, edge codegrees and pair
/// codegrees, then the containment relations between shapes are inverted.
inline GraphletCensus graphlet_census(const UndirectedGraph& g) {
  GraphletCensus gc;
  const std::size_t n = g.size();
  if (n < 4) return gc;
  using i64 = std::int64_t;
  auto choose2 = [](i64 x) { return x * (x - 1) / 2; };
  auto choose3 = [](i64 x) { return x * (x - 1) * (x - 2) / 6; };

  std::vector<i64> deg(n), tri_at(n, 0);
  for (std::size_t i = 0; i < n; ++i) deg[i] = static_cast<i64>(g.adj[i].size());

  i64 tri_x3 = 0, paths = 0, diamonds = 0, k4_x6 = 0;
  std::vector<std::size_t> common;
  for (std::size_t u = 0; u < n; ++u) {
    for (auto v : g.adj[u]) {
      if (v <= u) continue;
      common.clear();
      std::set_intersection(g.adj[u].begin(), g.adj[u].end(), g.adj[v].begin(), g.adj[v].end(),
                            std::back_inserter(common));
      const auto c = static_cast<i64>(common.size());
      tri_x3 += c;
      tri_at[u] += c;
      tri_at[v] += c;
      paths += (deg[u] - 1) * (deg[v] - 1);
      diamonds += choose2(c);
      for (std::size_t x = 0; x < common.size(); ++x) {
        for (std::size_t y = x + 1; y < common.size(); ++y) {
          k4_x6 += std::binary_search(g.adj[common[x]].begin(), g.adj[common[x]].end(), common[y]) ? 1 : 0;
        }
      }
    }
  }
  const i64 triangles = tri_x3 / 3;
  paths -= 3 * triangles;

  // Every 4-cycle is counted once per diagonal pair.
  i64 cycles_x2 = 0;
  std::vector<i64> codeg(n, 0);
  std::vector<std::size_t> touched;
  for (std::size_t u = 0; u < n; ++u) {
    touched.clear();
    for (auto v : g.adj[u]) {
      for (auto w : g.adj[v]) {
        if (w <= u) continue;
        if (codeg[w]++ == 0) touched.push_back(w);
      }
    }
    for (auto w : touched) {
      cycles_x2 += choose2(codeg[w]);
      codeg[w] = 0;
    }
  }

  i64 stars = 0, paws = 0;
  for (std::size_t v = 0; v < n; ++v) {
    stars += choose3(deg[v]);
    paws += (tri_at[v] / 2) * (deg[v] - 2);  // tri_at counts each triangle twice
  }

  const i64 k4 = k4_x6 / 6;
  const i64 i_diamond = diamonds - 6 * k4;
  const i64 i_cycle = cycles_x2 / 2 - i_diamond - 3 * k4;
  const i64 i_paw = paws - 4 * i_diamond - 12 * k4;
  const i64 i_star = stars - i_paw - 2 * i_diamond - 4 * k4;
  const i64 i_path = paths - 2 * i_paw - 4 * i_cycle - 6 * i_diamond - 12 * k4;

  const std::array<i64, 6> counts{i_path, i_star, i_paw, i_cycle, i_diamond, k4};
  for (std::size_t i = 0; i < 6; ++i) gc.counts[i] = static_cast<std::uint64_t>(counts[i]);
  const auto total = gc.total();
  if (total > 0) {
    for (std::size_t i = 0; i < 6; ++i) {
      gc.proportions[i] = static_cast<double>(gc.counts[i]) / static_cast<double>(total);
    }
  }
  return gc;
}

inline GraphletCensus graphlet_census(const ReasoningGraph& g) {
  return graphlet_census(undirected_projection(g));
}

// ---------------------------------------------------------------------------
// Inter-model comparison

/// Symmetric mean absolute percentage error over the union of keys, missing
/// entries read as 0 and 0-vs-0 terms contributing 0. Range [0, 200].
template <class Key>
double smape(const std::map<Key, double>& x, const std::map<Key, double>& y) {
  if (x.empty() && y.empty()) throw DomainError("smape: both inputs empty");
  std::set<Key> keys;
  for (const auto& [k, _] : x) keys.insert(k);
  for (const auto& [k, _] : y) keys.insert(k);
  double sum = 0.0;
  for (const auto& k : keys) {
    const auto xi = x.count(k) ? x.at(k) : 0.0;
    const auto yi = y.count(k) ? y.at(k) : 0.0;
    const double denom = (std::abs(yi) + std::abs(xi)) / 2.0;
    if (denom > 0.0) sum += std::abs(yi - xi) / denom;
  }
  return 100.0 * sum / static_cast<double>(keys.size());
}

}  // namespace reasonpath
