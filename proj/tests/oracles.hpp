// Brute-force reference implementations. Each is written directly from the
// defining formula and shares no code with the library beyond plain types.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

// ---------------------------------------------------------------- text

inline std::u32string utf8_to_u32(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = c;
    if (c >= 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    }
    for (int k = 1; k <= extra; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += 1 + extra;
  }
  return out;
}

template <class Seq>
std::vector<Seq> all_ngrams(const Seq& units, std::size_t n) {
  std::vector<Seq> out;
  if (units.size() < n) return out;
  for (std::size_t i = 0; i + n <= units.size(); ++i) out.emplace_back(units.begin() + i, units.begin() + i + n);
  std::sort(out.begin(), out.end());
  return out;
}

template <class T>
std::size_t multiset_overlap(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return common.size();
}

/// chrF over code points with ASCII and the test alphabet's spaces removed.
inline double chrf(const std::string& hyp, const std::string& ref, double beta = 2.0, int max_order = 6) {
  auto clean = [](const std::string& s) {
    std::u32string out;
    for (char32_t c : utf8_to_u32(s)) {
      if (c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == 0xA0 || c == 0x3000) continue;
      out.push_back(c);
    }
    return out;
  };
  const auto h = clean(hyp), r = clean(ref);
  if (h.empty() && r.empty()) return 1.0;
  if (h.empty() || r.empty()) return 0.0;
  double ps = 0, rs = 0;
  int pc = 0, rc = 0;
  for (int n = 1; n <= max_order; ++n) {
    const auto hg = all_ngrams(h, n), rg = all_ngrams(r, n);
    const double ov = static_cast<double>(multiset_overlap(hg, rg));
    if (!hg.empty()) {
      ps += ov / static_cast<double>(hg.size());
      ++pc;
    }
    if (!rg.empty()) {
      rs += ov / static_cast<double>(rg.size());
      ++rc;
    }
  }
  const double p = ps / pc, rr = rs / rc;
  const double b2 = beta * beta;
  if (b2 * p + rr == 0.0) return 0.0;
  return (1 + b2) * p * rr / (b2 * p + rr);
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> w;
  for (std::string x; in >> x;) w.push_back(x);
  return w;
}

inline double bleu(const std::string& hyp, const std::string& ref, int max_order = 4) {
  const auto h = words(hyp), r = words(ref);
  if (h.empty()) return 0.0;
  double prod = 1.0;
  for (int n = 1; n <= max_order; ++n) {
    const auto hg = all_ngrams(h, n), rg = all_ngrams(r, n);
    const double ov = static_cast<double>(multiset_overlap(hg, rg));
    const double p = n == 1 ? ov / static_cast<double>(hg.size()) : (ov + 1.0) / (static_cast<double>(hg.size()) + 1.0);
    prod *= p;
  }
  if (prod == 0.0) return 0.0;
  const double bp = h.size() < r.size() ? std::exp(1.0 - double(r.size()) / double(h.size())) : 1.0;
  return bp * std::pow(prod, 1.0 / max_order);
}

// ---------------------------------------------------------------- UPGMA

struct Merge {
  std::size_t a, b;
  double height;
  std::size_t size;
};

/// Naive agglomeration: full scan for the closest pair each step, with the
/// size-weighted update applied to a stored matrix.
inline std::vector<Merge> upgma_naive(std::vector<double> d, std::size_t n) {
  std::vector<Merge> merges;
  std::map<std::size_t, std::size_t> slot_of;  // cluster id -> matrix slot
  std::map<std::size_t, std::size_t> size_of;
  for (std::size_t i = 0; i < n; ++i) {
    slot_of[i] = i;
    size_of[i] = 1;
  }
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (auto [a, sa] : slot_of) {
      for (auto [b, sb] : slot_of) {
        if (b <= a) continue;
        if (d[sa * n + sb] < best) {
          best = d[sa * n + sb];
          ba = a;
          bb = b;
        }
      }
    }
    const auto sa = slot_of[ba], sb = slot_of[bb];
    const double wa = double(size_of[ba]), wb = double(size_of[bb]);
    for (auto [c, sc] : slot_of) {
      if (c == ba || c == bb) continue;
      const double v = (wa * d[sa * n + sc] + wb * d[sb * n + sc]) / (wa + wb);
      d[sa * n + sc] = d[sc * n + sa] = v;
    }
    const std::size_t fresh = n + step;
    merges.push_back({ba, bb, best, size_of[ba] + size_of[bb]});
    slot_of.erase(ba);
    slot_of.erase(bb);
    slot_of[fresh] = sa;
    size_of[fresh] = size_of[ba] + size_of[bb];
  }
  return merges;
}

/// Average linkage straight from the definition: the distance between two
/// clusters is the mean over all member pairs of the original distances.
inline std::vector<Merge> upgma_definition(const std::vector<double>& d, std::size_t n) {
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<Merge> merges;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (const auto& [a, ma] : members) {
      for (const auto& [b, mb] : members) {
        if (b <= a) continue;
        double s = 0;
        for (auto x : ma) {
          for (auto y : mb) s += d[x * n + y];
        }
        s /= double(ma.size() * mb.size());
        if (s < best) {
          best = s;
          ba = a;
          bb = b;
        }
      }
    }
    auto m = members[ba];
    m.insert(m.end(), members[bb].begin(), members[bb].end());
    merges.push_back({ba, bb, best, m.size()});
    members.erase(ba);
    members.erase(bb);
    members[n + step] = std::move(m);
  }
  return merges;
}

/// Cluster count of `texts` under symmetrized chrF and a distance cut, all
/// from the naive pieces above.
inline std::size_t trajectory_clusters(const std::vector<std::string>& texts, double threshold) {
  const std::size_t n = texts.size();
  if (n == 0) return 0;
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = (chrf(texts[i], texts[j]) + chrf(texts[j], texts[i])) / 2.0;
      d[i * n + j] = d[j * n + i] = 1.0 - s;
    }
  }
  std::size_t below = 0;
  for (const auto& m : upgma_naive(d, n)) below += m.height < threshold ? 1 : 0;
  return n - below;
}

// ---------------------------------------------------------------- pass@k

inline double pass_at_k_exact(long n, long c, long k) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  auto binom = [](long a, long b) -> cpp_int {
    if (b < 0 || b > a) return 0;
    cpp_int r = 1;
    for (long i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  cpp_rational v = cpp_rational(1) - cpp_rational(binom(n - c, k), binom(n, k));
  return v.convert_to<double>();
}

/// Fraction of `draws` random k-subsets of n items (c marked) containing a
/// marked item.
inline double pass_at_k_monte_carlo(long n, long c, long k, long draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> items(static_cast<std::size_t>(n), 0);
  for (long i = 0; i < c; ++i) items[static_cast<std::size_t>(i)] = 1;
  long hits = 0;
  for (long t = 0; t < draws; ++t) {
    // Partial Fisher-Yates over the first k positions.
    bool hit = false;
    for (long i = 0; i < k; ++i) {
      std::uniform_int_distribution<long> pick(i, n - 1);
      std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(pick(rng))]);
      hit = hit || items[static_cast<std::size_t>(i)] == 1;
    }
    hits += hit ? 1 : 0;
  }
  return double(hits) / double(draws);
}

// ---------------------------------------------------------------- graphs

using Adj = std::vector<std::vector<int>>;  // adjacency matrix, 0/1

inline std::vector<std::vector<int>> bfs_all(const Adj& a) {
  const int n = int(a.size());
  std::vector<std::vector<int>> d(n, std::vector<int>(n, -1));
  for (int s = 0; s < n; ++s) {
    std::vector<int> q{s};
    d[s][s] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
      const int u = q[h];
      for (int v = 0; v < n; ++v) {
        if (a[u][v] && d[s][v] < 0) {
          d[s][v] = d[s][u] + 1;
          q.push_back(v);
        }
      }
    }
  }
  return d;
}

/// Betweenness by enumerating every shortest s-t path explicitly, scaled by
/// 1/((n-1)(n-2)). Works for directed adjacency (a[u][v] means u->v).
inline std::vector<double> betweenness_enumerate(const Adj& a) {
  const int n = int(a.size());
  std::vector<double> bc(n, 0.0);
  if (n < 3) return bc;
  const auto d = bfs_all(a);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t || d[s][t] < 0) continue;
      std::vector<std::vector<int>> paths;
      std::vector<int> cur{s};
      std::function<void(int)> walk = [&](int u) {
        if (u == t) {
          paths.push_back(cur);
          return;
        }
        for (int v = 0; v < n; ++v) {
          if (a[u][v] && d[s][v] == d[s][u] + 1 && d[v][t] >= 0 && d[s][v] + d[v][t] == d[s][t]) {
            cur.push_back(v);
            walk(v);
            cur.pop_back();
          }
        }
      };
      walk(s);
      for (int v = 0; v < n; ++v) {
        if (v == s || v == t) continue;
        long through = 0;
        for (const auto& p : paths) through += std::count(p.begin() + 1, p.end() - 1, v);
        bc[v] += double(through) / double(paths.size());
      }
    }
  }
  for (auto& x : bc) x /= double(n - 1) * double(n - 2);
  return bc;
}

/// Induced connected 4-node subgraph counts by checking every 4-subset, in
/// order path, star, paw, cycle, diamond, complete.
inline std::array<std::uint64_t, 6> graphlets_bruteforce(const Adj& a) {
  std::array<std::uint64_t, 6> c{};
  const int n = int(a.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
          const int v[4] = {i, j, k, l};
          int deg[4] = {0, 0, 0, 0}, e = 0;
          for (int x = 0; x < 4; ++x)
            for (int y = x + 1; y < 4; ++y)
              if (a[v[x]][v[y]]) {
                ++deg[x];
                ++deg[y];
                ++e;
              }
          // Connectivity: flood from vertex 0 within the subset.
          int seen = 1, stack[4] = {0}, sp = 1;
          bool vis[4] = {true, false, false, false};
          while (sp) {
            const int x = stack[--sp];
            for (int y = 0; y < 4; ++y)
              if (!vis[y] && a[v[x]][v[y]]) {
                vis[y] = true;
                ++seen;
                stack[sp++] = y;
              }
          }
          if (seen < 4) continue;
          std::sort(deg, deg + 4);
          const int maxd = deg[3];
          if (e == 3) c[maxd == 3 ? 1 : 0]++;
          else if (e == 4) c[maxd == 3 ? 2 : 3]++;
          else if (e == 5) c[4]++;
          else c[5]++;
        }
  return c;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> m) {
  const int n = int(m.size());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m[p][q] * m[p][q];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(m[p][q]) < 1e-300) continue;
        const double theta = (m[q][q] - m[p][p]) / (2 * m[p][q]);
        const double t = (theta >= 0 ? 1 : -1) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double modularity(const Adj& a, const std::vector<std::size_t>& comm) {
  const int n = int(a.size());
  double m2 = 0;
  std::vector<double> k(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      k[i] += a[i][j];
      m2 += a[i][j];
    }
  double q = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (comm[i] == comm[j]) q += a[i][j] - k[i] * k[j] / m2;
  return q / m2;
}

/// Best modularity over every set partition of the nodes.
inline double modularity_exhaustive(const Adj& a) {
  const int n = int(a.size());
  std::vector<std::size_t> comm(n, 0);
  double best = -1;
  std::function<void(int, std::size_t)> rec = [&](int i, std::size_t used) {
    if (i == n) {
      best = std::max(best, modularity(a, comm));
      return;
    }
    for (std::size_t c = 0; c <= used && c < std::size_t(n); ++c) {
      comm[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  comm[0] = 0;
  rec(1, 1);
  return best;
}

struct Metrics {
  std::optional<double> edge_density, clustering_coefficient_norm, assortativity, modularity,
      freeman_centralization, avg_path_length_norm, global_efficiency, algebraic_connectivity, small_world_sigma;
  std::optional<double> avg_path_length;
};

/// Direct formula evaluation of the nine global metrics. Modularity is
/// evaluated for the supplied partition.
inline Metrics global_metrics(const Adj& a, const std::vector<std::size_t>& partition) {
  Metrics r;
  const int n = int(a.size());
  const double nd = n;
  std::vector<double> k(n, 0);
  double m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k[i] += a[i][j];
  for (double x : k) m += x;
  m /= 2;
  const double kbar = 2 * m / nd;
  r.edge_density = n >= 2 ? 2 * m / (nd * (nd - 1)) : 0.0;

  double csum = 0;
  for (int i = 0; i < n; ++i) {
    if (k[i] < 2) continue;
    double t = 0;  // ordered neighbour pairs that are linked
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (x != y && a[i][x] && a[i][y] && a[x][y]) t += 1;
    csum += t / (k[i] * (k[i] - 1));
  }
  const double C = csum / nd;
  if (m > 0) r.clustering_coefficient_norm = C / (kbar / nd);

  if (m > 0) {
    std::vector<double> xs, ys;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (a[i][j]) {
          xs.push_back(k[i]);
          ys.push_back(k[j]);
        }
    const double N = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t e = 0; e < xs.size(); ++e) {
      sx += xs[e];
      sy += ys[e];
      sxx += xs[e] * xs[e];
      syy += ys[e] * ys[e];
      sxy += xs[e] * ys[e];
    }
    const double vx = sxx / N - (sx / N) * (sx / N);
    const double vy = syy / N - (sy / N) * (sy / N);
    if (vx > 1e-12 && vy > 1e-12) r.assortativity = (sxy / N - (sx / N) * (sy / N)) / std::sqrt(vx * vy);
    r.modularity = modularity(a, partition);
  }

  if (n >= 3) {
    const double dmax = *std::max_element(k.begin(), k.end());
    double s = 0;
    for (double x : k) s += dmax - x;
    r.freeman_centralization = s / ((nd - 1) * (nd - 2));
  }

  // Floyd-Warshall hop distances.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (int i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (int j = 0; j < n; ++j)
      if (a[i][j]) d[i][j] = 1;
  }
  for (int w = 0; w < n; ++w)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][w] + d[w][j]);

  if (n >= 2) {
    double eff = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && d[i][j] < inf) eff += 1 / d[i][j];
    r.global_efficiency = eff / (nd * (nd - 1));

    // Largest component; ties go to the one holding the lowest node index.
    std::vector<int> best_members;
    std::vector<bool> done(n, false);
    for (int i = 0; i < n; ++i) {
      if (done[i]) continue;
      std::vector<int> mem;
      for (int j = 0; j < n; ++j)
        if (d[i][j] < inf) {
          mem.push_back(j);
          done[j] = true;
        }
      if (mem.size() > best_members.size()) best_members = mem;
    }
    if (best_members.size() >= 2) {
      double s = 0, cnt = 0;
      for (int i : best_members)
        for (int j : best_members)
          if (i != j) {
            s += d[i][j];
            cnt += 1;
          }
      r.avg_path_length = s / cnt;
      if (kbar > 1) r.avg_path_length_norm = *r.avg_path_length / (std::log(nd) / std::log(kbar));
    }

    std::vector<std::vector<double>> lap(n, std::vector<double>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lap[i][j] = i == j ? k[i] : -a[i][j];
    r.algebraic_connectivity = std::max(0.0, jacobi_eigenvalues(lap)[1]);
    bool connected = true;
    for (int j = 0; j < n; ++j) connected = connected && d[0][j] < inf;
    if (!connected) r.algebraic_connectivity = 0.0;
  }
  if (r.clustering_coefficient_norm && r.avg_path_length_norm && *r.avg_path_length_norm > 0) {
    r.small_world_sigma = *r.clustering_coefficient_norm / *r.avg_path_length_norm;
  }
  return r;
}

// ---------------------------------------------------------------- fits

/// OLS on (R, log10 X) through the 2x2 normal equations. Returns (alpha, beta).
inline std::pair<double, double> decay_normal_equations(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !(v > 0); });
  std::sort(values.begin(), values.end(), std::greater<>());
  long double n = values.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long double x = i + 1, y = std::log10(static_cast<long double>(values[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const long double det = n * sxx - sx * sx;
  const long double b = (n * sxy - sx * sy) / det;
  const long double a = (sy * sxx - sx * sxy) / det;
  return {double(a), double(-b)};
}

// ---------------------------------------------------------------- k-means

inline std::size_t nearest(const std::vector<std::vector<double>>& cents, const std::vector<double>& p) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cents.size(); ++c) {
    double s = 0;
    for (std::size_t j = 0; j < p.size(); ++j) s += (p[j] - cents[c][j]) * (p[j] - cents[c][j]);
    if (s < bd) {
      bd = s;
      best = c;
    }
  }
  return best;
}

}  // namespace oracle
