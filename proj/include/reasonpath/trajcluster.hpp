#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "reasonpath/corpus.hpp"
#include "reasonpath/error.hpp"
#include "reasonpath/textsim.hpp"

namespace reasonpath {

/// One agglomeration step. Leaves are clusters 0..N-1; merge k creates
/// cluster N+k. `a < b`.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
};

namespace detail {

inline void validate_distances(std::span<const double> d, std::size_t n) {
  if (n == 0) throw ValidationError("upgma: empty distance matrix");
  if (d.size() != n * n) throw ValidationError("upgma: matrix is not N x N");
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i * n + i] != 0.0) throw ValidationError("upgma: non-zero diagonal entry");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = d[i * n + j];
      if (!std::isfinite(v) || v < 0.0) throw ValidationError("upgma: negative or non-finite distance");
      if (v != d[j * n + i]) throw ValidationError("upgma: asymmetric distance matrix");
    }
  }
}

}  // namespace detail

/// Average-linkage (UPGMA) agglomerative clustering of a row-major N x N
/// distance matrix. Ties on the minimal distance go to the lexicographically
/// smallest (a, b) pair of cluster ids.
///
/// Each active cluster caches its nearest neighbour among clusters with a
/// larger id, so a step only rescans the rows whose neighbour was consumed.
inline Dendrogram upgma(std::span<const double> distances, std::size_t n) {
  detail::validate_distances(distances, n);
  Dendrogram dg;
  dg.leaves = n;
  if (n == 1) return dg;

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<double> d(distances.begin(), distances.end());
  std::vector<std::size_t> id(n), size(n, 1), nn(n, none);
  std::vector<double> nnd(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> active(n);  // slots, ascending by cluster id
  for (std::size_t s = 0; s < n; ++s) id[s] = active[s] = s;

  auto rescan = [&](std::size_t pos) {
    const auto s = active[pos];
    nn[s] = none;
    nnd[s] = std::numeric_limits<double>::infinity();
    for (std::size_t q = pos + 1; q < active.size(); ++q) {
      const auto t = active[q];
      if (d[s * n + t] < nnd[s]) {
        nnd[s] = d[s * n + t];
        nn[s] = t;
      }
    }
  };
  for (std::size_t pos = 0; pos < active.size(); ++pos) rescan(pos);

  double last_height = 0.0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best = none;
    for (auto s : active) {
      if (nn[s] != none && (best == none || nnd[s] < nnd[best])) best = s;
    }
    const auto sa = best, sb = nn[best];
    const double height = nnd[sa];
    if (height < last_height - 1e-12 * std::max(1.0, last_height)) {
      throw ValidationError("upgma: non-monotone merge heights");
    }
    last_height = std::max(last_height, height);
    dg.merges.push_back({id[sa], id[sb], height, size[sa] + size[sb]});

    const double wa = static_cast<double>(size[sa]), wb = static_cast<double>(size[sb]);
    for (auto t : active) {
      if (t == sa || t == sb) continue;
      const double v = (wa * d[sa * n + t] + wb * d[sb * n + t]) / (wa + wb);
      d[sa * n + t] = d[t * n + sa] = v;
    }
    id[sa] = n + step;
    size[sa] += size[sb];
    std::erase_if(active, [&](std::size_t s) { return s == sa || s == sb; });
    active.push_back(sa);

    const auto fresh = active.size() - 1;
    nn[sa] = none;
    nnd[sa] = std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos < fresh; ++pos) {
      const auto t = active[pos];
      if (nn[t] == sa || nn[t] == sb) {
        rescan(pos);
      } else if (d[t * n + sa] < nnd[t]) {
        nnd[t] = d[t * n + sa];
        nn[t] = sa;
      }
    }
  }
  return dg;
}

inline Dendrogram upgma(const std::vector<double>& distances, std::size_t n) {
  return upgma(std::span<const double>(distances), n);
}

/// Number of clusters left when only merges strictly below the threshold are kept.
inline std::size_t cut(const Dendrogram& dg, double distance_threshold) {
  if (distance_threshold < 0.0) throw DomainError("cut: threshold must be >= 0");
  std::size_t kept = 0;
  for (const auto& m : dg.merges) kept += m.height < distance_threshold ? 1 : 0;
  return dg.leaves - kept;
}

struct TrajectoryCounts {
  std::string problem_id;
  std::string model_id;
  std::size_t n_correct_clusters = 0;
  std::size_t n_incorrect_clusters = 0;
  std::size_t m_plus = 0;
  std::size_t m_minus = 0;
  double threshold = 0.4;
};

/// Distances 1 - s from a similarity matrix.
inline std::vector<double> to_distances(const SimilarityMatrix& s) {
  std::vector<double> d(s.values.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 - s.values[i];
  for (std::size_t i = 0; i < s.n; ++i) d[i * s.n + i] = 0.0;
  return d;
}

inline std::size_t count_clusters(std::span<const TraceSample> part, const SimilarityParams& params,
                                  double threshold) {
  if (part.empty()) return 0;
  const auto sim = similarity_matrix(part, params);
  return cut(upgma(to_distances(sim), sim.n), threshold);
}

/// Unique-trajectory counts for the correct and incorrect parts of one
/// (problem, model). `threshold` is a distance; similarity 0.60 is 0.4.
inline TrajectoryCounts count_unique_trajectories(const Corpus& corpus, const std::string& problem_id,
                                                  const std::string& model_id,
                                                  const SimilarityParams& params,
                                                  double threshold) {
  auto [correct, incorrect] = split_by_correctness(corpus, problem_id, model_id);
  TrajectoryCounts tc;
  tc.problem_id = problem_id;
  tc.model_id = model_id;
  tc.m_plus = correct.size();
  tc.m_minus = incorrect.size();
  tc.threshold = threshold;
  tc.n_correct_clusters = count_clusters(correct, params, threshold);
  tc.n_incorrect_clusters = count_clusters(incorrect, params, threshold);
  return tc;
}

/// Unbiased pass@k for one problem: 1 - C(n-c, k) / C(n, k), evaluated as
/// 1 - prod_{j<k} (n-c-j)/(n-j).
inline double pass_at_k(long n, long c, long k) {
  if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
    throw DomainError("pass_at_k: need 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) +
                      ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  }
  if (n - c < k) return 1.0;
  if (k == 1) return static_cast<double>(c) / static_cast<double>(n);
  double prod = 1.0;
  for (long j = 0; j < k; ++j) {
    prod *= static_cast<double>(n - c - j) / static_cast<double>(n - j);
  }
  return 1.0 - prod;
}

/// Problem-averaged pass@k for one model, keyed by k.
inline std::map<int, double> pass_at_k_curve(const Corpus& corpus, const std::string& model_id,
                                             std::span<const int> ks) {
  std::vector<std::pair<std::string, std::pair<long, long>>> per_problem;
  for (const auto& [pid, _] : corpus.problems()) {
    if (!corpus.contains(pid, model_id)) continue;
    const auto samples = corpus.samples_for(pid, model_id);
    long c = 0;
    for (const auto& s : samples) c += s.correct ? 1 : 0;
    per_problem.push_back({pid, {static_cast<long>(samples.size()), c}});
  }
  std::map<int, double> curve;
  if (per_problem.empty()) return curve;
  for (int k : ks) {
    double sum = 0.0;
    for (const auto& [pid, nc] : per_problem) {
      if (k < 1 || k > nc.first) {
        throw DomainError("pass_at_k_curve: k=" + std::to_string(k) + " invalid for problem " +
                          pid + " with n=" + std::to_string(nc.first));
      }
      sum += pass_at_k(nc.first, nc.second, k);
    }
    curve[k] = sum / static_cast<double>(per_problem.size());
  }
  return curve;
}

}  // namespace reasonpath
