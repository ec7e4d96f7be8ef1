#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "reasonpath/error.hpp"
#include "reasonpath/textsim.hpp"

namespace reasonpath {

/// (problem, model, sample, position) of one reasoning step.
struct ChunkRef {
  SampleRef sample;
  std::size_t position = 0;

  friend auto operator<=>(const ChunkRef&, const ChunkRef&) = default;
};

inline std::string to_string(const ChunkRef& r) {
  return "(" + r.sample.problem_id + ", " + r.sample.model_id + ", " +
         std::to_string(r.sample.sample_index) + ", " + std::to_string(r.position) + ")";
}

struct EmbeddedSentence {
  ChunkRef ref;
  std::vector<double> vector;
};

/// Reads embedding JSONL records. All vectors must be finite and share one
/// dimension (`expected_dim` when given).
inline std::vector<EmbeddedSentence> load_embeddings(const std::string& path,
                                                     std::optional<std::size_t> expected_dim = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path);
  std::vector<EmbeddedSentence> out;
  std::optional<std::size_t> dim = expected_dim;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    EmbeddedSentence e;
    try {
      auto j = nlohmann::json::parse(line);
      e.ref.sample.problem_id = j.at("problem_id").get<std::string>();
      e.ref.sample.model_id = j.at("model_id").get<std::string>();
      e.ref.sample.sample_index = j.at("sample_index").get<int>();
      e.ref.position = j.at("position").get<std::size_t>();
      e.vector = j.at("vector").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    if (!dim) dim = e.vector.size();
    if (e.vector.size() != *dim || e.vector.empty()) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": record " + to_string(e.ref) +
                        " has dimension " + std::to_string(e.vector.size()) + ", expected " +
                        std::to_string(*dim));
    }
    for (double v : e.vector) {
      if (!std::isfinite(v)) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": record " +
                              to_string(e.ref) + " has a non-finite component");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_embeddings(const std::vector<EmbeddedSentence>& es, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& e : es) {
    nlohmann::ordered_json j;
    j["problem_id"] = e.ref.sample.problem_id;
    j["model_id"] = e.ref.sample.model_id;
    j["sample_index"] = e.ref.sample.sample_index;
    j["position"] = e.ref.position;
    j["vector"] = e.vector;
    out << j.dump() << '\n';
  }
}

inline void l2_normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s > 0.0) {
    const double inv = 1.0 / std::sqrt(s);
    for (double& x : v) x *= inv;
  }
}

struct KMeansOptions {
  std::size_t k = 8;
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-4;  // on the Frobenius norm of the centroid shift
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct KMeansModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // k x dim, row-major
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations_run = 0;
  int best_restart = 0;
  std::vector<double> inertia_history;  // of the selected restart, one entry per assignment

  std::span<const double> centroid(std::size_t i) const {
    return std::span<const double>(centroids).subspan(i * dim, dim);
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

struct Flat {
  std::size_t n = 0, d = 0;
  std::vector<double> x;
  const double* row(std::size_t i) const { return x.data() + i * d; }
};

// Nearest centroid for each point (ties to the lowest id) and its squared
// distance. Points are independent, so any split across threads gives
// bitwise-identical results.
inline void assign_all(const Flat& pts, const std::vector<double>& cents, std::size_t k,
                       std::vector<std::size_t>& labels, std::vector<double>& dist,
                       unsigned threads) {
  labels.resize(pts.n);
  dist.resize(pts.n);
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sq_dist(pts.row(i), cents.data() + c * pts.d, pts.d);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      labels[i] = best;
      dist[i] = bd;
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(pts.n)));
  if (threads == 1) {
    work(0, pts.n);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t per = (pts.n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const auto lo = std::min(pts.n, t * per), hi = std::min(pts.n, lo + per);
    pool.emplace_back(work, lo, hi);
  }
}

inline double sum_in_order(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline std::size_t count_distinct(const Flat& pts) {
  std::vector<std::size_t> idx(pts.n);
  for (std::size_t i = 0; i < pts.n; ++i) idx[i] = i;
  auto row_less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(pts.row(a), pts.row(a) + pts.d, pts.row(b), pts.row(b) + pts.d);
  };
  std::sort(idx.begin(), idx.end(), row_less);
  std::size_t distinct = pts.n ? 1 : 0;
  for (std::size_t i = 1; i < idx.size(); ++i) distinct += row_less(idx[i - 1], idx[i]) ? 1 : 0;
  return distinct;
}

// k-means++ seeding: first centre uniform, then proportional to D^2.
inline std::vector<double> kmeanspp(const Flat& pts, std::size_t k, std::mt19937_64& rng) {
  std::vector<double> cents;
  cents.reserve(k * pts.d);
  auto first = std::min(pts.n - 1, static_cast<std::size_t>(unit_uniform(rng) * pts.n));
  cents.insert(cents.end(), pts.row(first), pts.row(first) + pts.d);
  std::vector<double> d2(pts.n);
  for (std::size_t i = 0; i < pts.n; ++i) d2[i] = sq_dist(pts.row(i), pts.row(first), pts.d);
  for (std::size_t c = 1; c < k; ++c) {
    const double total = sum_in_order(d2);
    const double target = unit_uniform(rng) * total;
    double acc = 0.0;
    std::size_t pick = pts.n;
    for (std::size_t i = 0; i < pts.n; ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    cents.insert(cents.end(), pts.row(pick), pts.row(pick) + pts.d);
    for (std::size_t i = 0; i < pts.n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(pts.row(i), pts.row(pick), pts.d));
    }
  }
  return cents;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding and `n_init` restarts; the restart
/// with the lowest inertia wins (ties to the earliest). Centroid sums run in
/// ascending point order, so results are bitwise reproducible for a given
/// seed regardless of `threads`.
inline KMeansModel kmeans_fit(const std::vector<std::vector<double>>& points,
                              const KMeansOptions& opt) {
  if (points.empty()) throw DomainError("kmeans_fit: no points");
  if (opt.k < 1) throw DomainError("kmeans_fit: K must be >= 1");
  if (opt.n_init < 1 || opt.max_iter < 1 || !(opt.tol >= 0.0)) {
    throw DomainError("kmeans_fit: n_init, max_iter must be >= 1 and tol >= 0");
  }
  detail::Flat pts;
  pts.n = points.size();
  pts.d = points[0].size();
  if (pts.d == 0) throw DomainError("kmeans_fit: zero-dimensional points");
  pts.x.reserve(pts.n * pts.d);
  for (const auto& p : points) {
    if (p.size() != pts.d) throw ValidationError("kmeans_fit: points differ in dimension");
    pts.x.insert(pts.x.end(), p.begin(), p.end());
  }
  if (opt.k > detail::count_distinct(pts)) {
    throw DomainError("kmeans_fit: K=" + std::to_string(opt.k) + " exceeds the number of distinct points");
  }

  const auto k = opt.k, d = pts.d;
  KMeansModel best;
  bool have_best = false;
  for (int r = 0; r < opt.n_init; ++r) {
    std::mt19937_64 rng(detail::splitmix64(opt.seed + 0x632BE59BD9B4E019ull * static_cast<std::uint64_t>(r)));
    auto cents = detail::kmeanspp(pts, k, rng);
    std::vector<std::size_t> labels, prev_labels;
    std::vector<double> dist;
    detail::assign_all(pts, cents, k, labels, dist, opt.threads);
    std::vector<double> history{detail::sum_in_order(dist)};
    int it = 0;
    while (it < opt.max_iter) {
      ++it;
      std::vector<double> sums(k * d, 0.0);
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < pts.n; ++i) {
        ++counts[labels[i]];
        double* s = sums.data() + labels[i] * d;
        for (std::size_t j = 0; j < d; ++j) s[j] += pts.row(i)[j];
      }
      std::vector<double> next(k * d);
      std::vector<char> taken(pts.n, 0);
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          for (std::size_t j = 0; j < d; ++j) next[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
          continue;
        }
        // Empty cluster: move it onto the point farthest from its centroid.
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < pts.n; ++i) {
          if (!taken[i] && dist[i] > fd) {
            fd = dist[i];
            far = i;
          }
        }
        taken[far] = 1;
        std::copy(pts.row(far), pts.row(far) + d, next.begin() + static_cast<std::ptrdiff_t>(c * d));
      }
      double shift = 0.0;
      for (std::size_t i = 0; i < next.size(); ++i) shift += (next[i] - cents[i]) * (next[i] - cents[i]);
      cents = std::move(next);
      prev_labels = labels;
      detail::assign_all(pts, cents, k, labels, dist, opt.threads);
      history.push_back(detail::sum_in_order(dist));
      if (std::sqrt(shift) < opt.tol || labels == prev_labels) break;
    }
    const double inertia = history.back();
    if (!have_best || inertia < best.inertia) {
      best.k = k;
      best.dim = d;
      best.centroids = std::move(cents);
      best.inertia = inertia;
      best.seed = opt.seed;
      best.iterations_run = it;
      best.best_restart = r;
      best.inertia_history = std::move(history);
      have_best = true;
    }
  }
  return best;
}

/// Index of the nearest centroid (squared Euclidean; ties to the lowest id).
inline std::size_t nearest_centroid(const KMeansModel& model, std::span<const double> v) {
  if (v.size() != model.dim) throw ValidationError("assign: dimension mismatch");
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < model.k; ++c) {
    const double dd = detail::sq_dist(v.data(), model.centroids.data() + c * model.dim, model.dim);
    if (dd < bd) {
      bd = dd;
      best = c;
    }
  }
  return best;
}

struct NodeAssignment {
  ChunkRef ref;
  std::size_t node_id = 0;
};

inline std::vector<NodeAssignment> assign(const KMeansModel& model,
                                          const std::vector<EmbeddedSentence>& embeddings) {
  std::vector<NodeAssignment> out;
  out.reserve(embeddings.size());
  for (const auto& e : embeddings) out.push_back({e.ref, nearest_centroid(model, e.vector)});
  return out;
}

}  // namespace reasonpath
