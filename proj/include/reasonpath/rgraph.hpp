#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reasonpath/embedspace.hpp"
#include "reasonpath/error.hpp"

namespace reasonpath {

using NodeId = std::size_t;

/// Node sequence of one sample with consecutive repeats collapsed.
struct NodePath {
  SampleRef ref;
  std::vector<NodeId> nodes;
};

struct EdgeAttr {
  std::size_t frequency = 0;
  double distance = 0.0;

  friend bool operator==(const EdgeAttr&, const EdgeAttr&) = default;
};

/// Simple directed graph over visited nodes. Ordered containers keep every
/// traversal deterministic.
struct ReasoningGraph {
  std::string problem_id;
  std::string model_id;
  std::map<NodeId, std::size_t> visits;
  std::map<std::pair<NodeId, NodeId>, EdgeAttr> edges;

  std::size_t node_count() const { return visits.size(); }
  bool empty() const { return visits.empty(); }

  friend bool operator==(const ReasoningGraph& a, const ReasoningGraph& b) {
    return a.visits == b.visits && a.edges == b.edges;
  }
};

inline NodePath build_path(std::span<const NodeId> assignments, SampleRef ref = {}) {
  NodePath p{std::move(ref), {}};
  for (auto v : assignments) {
    if (p.nodes.empty() || p.nodes.back() != v) p.nodes.push_back(v);
  }
  return p;
}

inline NodePath build_path(const std::vector<NodeId>& assignments, SampleRef ref = {}) {
  return build_path(std::span<const NodeId>(assignments), std::move(ref));
}

/// Union graph of `paths`. `centroids` is k x dim row-major; edge distance is
/// the Euclidean distance between endpoint centroids.
inline ReasoningGraph build_graph(const std::vector<NodePath>& paths, std::span<const double> centroids,
                                  std::size_t dim) {
  const std::size_t k = dim ? centroids.size() / dim : 0;
  ReasoningGraph g;
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
      const auto v = p.nodes[i];
      if (v >= k) {
        throw ValidationError("build_graph: node id " + std::to_string(v) + " out of range (K=" +
                              std::to_string(k) + ")");
      }
      ++g.visits[v];
      if (i == 0) continue;
      const auto u = p.nodes[i - 1];
      if (u == v) throw ValidationError("build_graph: path contains a self-loop");
      auto& e = g.edges[{u, v}];
      if (e.frequency++ == 0) {
        e.distance = std::sqrt(detail::sq_dist(centroids.data() + u * dim, centroids.data() + v * dim, dim));
      }
    }
  }
  return g;
}

inline ReasoningGraph build_graph(const std::vector<NodePath>& paths, const KMeansModel& model) {
  return build_graph(paths, model.centroids, model.dim);
}

enum class GraphFormat { graphml, dot, edge_csv };

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

inline void write_edge_csv(const ReasoningGraph& g, const std::string& edges_path,
                           const std::string& nodes_path) {
  auto e = detail::open_out(edges_path);
  e << "src,dst,frequency,distance\n";
  for (const auto& [uv, a] : g.edges) {
    e << uv.first << ',' << uv.second << ',' << a.frequency << ',' << detail::fmt_double(a.distance) << '\n';
  }
  auto n = detail::open_out(nodes_path);
  n << "node_id,visit_count\n";
  for (const auto& [v, c] : g.visits) n << v << ',' << c << '\n';
}

inline ReasoningGraph read_edge_csv(const std::string& edges_path, const std::string& nodes_path) {
  auto fields = [](const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    return f;
  };
  auto to_size = [](const std::string& s, const std::string& where) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IngestError(where + ": bad integer '" + s + "'");
    return v;
  };
  ReasoningGraph g;
  std::ifstream nodes(nodes_path);
  if (!nodes) throw IoError("cannot open " + nodes_path);
  std::string line;
  std::getline(nodes, line);
  while (std::getline(nodes, line)) {
    if (line.empty()) continue;
    auto f = fields(line);
    if (f.size() != 2) throw IngestError(nodes_path + ": expected 2 columns");
    g.visits[to_size(f[0], nodes_path)] = to_size(f[1], nodes_path);
  }
  std::ifstream edges(edges_path);
  if (!edges) throw IoError("cannot open " + edges_path);
  std::getline(edges, line);
  while (std::getline(edges, line)) {
    if (line.empty()) continue;
    auto f = fields(line);
    if (f.size() != 4) throw IngestError(edges_path + ": expected 4 columns");
    g.edges[{to_size(f[0], edges_path), to_size(f[1], edges_path)}] =
        EdgeAttr{to_size(f[2], edges_path), std::stod(f[3])};
  }
  return g;
}

/// Writes `stem`.graphml, `stem`.dot, or `stem`.edges.csv + `stem`.nodes.csv.
inline void export_graph(const ReasoningGraph& g, GraphFormat format, const std::string& stem) {
  switch (format) {
    case GraphFormat::edge_csv:
      write_edge_csv(g, stem + ".edges.csv", stem + ".nodes.csv");
      return;
    case GraphFormat::dot: {
      auto out = detail::open_out(stem + ".dot");
      out << "digraph \"" << g.problem_id << "/" << g.model_id << "\" {\n";
      for (const auto& [v, c] : g.visits) out << "  " << v << " [visits=" << c << "];\n";
      for (const auto& [uv, a] : g.edges) {
        out << "  " << uv.first << " -> " << uv.second << " [frequency=" << a.frequency
            << ", distance=" << detail::fmt_double(a.distance) << "];\n";
      }
      out << "}\n";
      return;
    }
    case GraphFormat::graphml: {
      auto out = detail::open_out(stem + ".graphml");
      out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
          << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
          << "  <key id=\"visits\" for=\"node\" attr.name=\"visit_count\" attr.type=\"long\"/>\n"
          << "  <key id=\"freq\" for=\"edge\" attr.name=\"frequency\" attr.type=\"long\"/>\n"
          << "  <key id=\"dist\" for=\"edge\" attr.name=\"distance\" attr.type=\"double\"/>\n"
          << "  <graph id=\"" << detail::xml_escape(g.problem_id + "/" + g.model_id)
          << "\" edgedefault=\"directed\">\n";
      for (const auto& [v, c] : g.visits) {
        out << "    <node id=\"n" << v << "\"><data key=\"visits\">" << c << "</data></node>\n";
      }
      for (const auto& [uv, a] : g.edges) {
        out << "    <edge source=\"n" << uv.first << "\" target=\"n" << uv.second << "\">"
            << "<data key=\"freq\">" << a.frequency << "</data>"
            << "<data key=\"dist\">" << detail::fmt_double(a.distance) << "</data></edge>\n";
      }
      out << "  </graph>\n</graphml>\n";
      return;
    }
  }
}

}  // namespace reasonpath
