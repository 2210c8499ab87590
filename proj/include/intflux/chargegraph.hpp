#ifndef INTFLUX_CHARGEGRAPH_HPP
#define INTFLUX_CHARGEGRAPH_HPP

// Charge graph of a path decomposition.
//
// Vertex 0 is BoundaryIn (faces where flux enters), vertex 1 is BoundaryOut,
// then one vertex per charged cell in cell order. Edges follow path
// orientation, so they always run from a source-like vertex (BoundaryIn or a
// positive charge) to a sink-like vertex (BoundaryOut or a negative charge).

#include <cmath>
#include <map>
#include <ostream>
#include <vector>

#include "intflux/decompose.hpp"

namespace intflux {

struct GraphVertex {
  AnchorClass::Kind kind = AnchorClass::Kind::charge;
  CellId cell = kNone;
  int charge = 0;  // signed multiplicity
};

struct GraphEdge {
  int from = 0, to = 0;
  double weight = 0;
  std::vector<std::size_t> paths;  // indices of the source paths in the decomposition
};

struct ChargeGraph {
  std::vector<GraphVertex> vertices;
  std::vector<GraphEdge> edges;

  static constexpr int kBoundaryIn = 0;
  static constexpr int kBoundaryOut = 1;

  bool is_charge(int v) const { return vertices[v].kind == AnchorClass::Kind::charge; }
  double out_weight(int v) const {
    double s = 0;
    for (const GraphEdge& e : edges)
      if (e.from == v) s += e.weight;
    return s;
  }
  double in_weight(int v) const {
    double s = 0;
    for (const GraphEdge& e : edges)
      if (e.to == v) s += e.weight;
    return s;
  }
  double total_weight() const {
    double s = 0;
    for (const GraphEdge& e : edges) s += e.weight;
    return s;
  }
};

struct GraphOp {
  std::size_t edge = 0;
  double alpha = 1.0;
};

namespace detail {

struct EdgeAssignment {
  std::vector<GraphVertex> vertices;
  std::map<CellId, int> vertex_of_cell;
  std::vector<std::pair<int, int>> edge_ends;  // ordered by (from, to)
  std::vector<std::size_t> path_edge;          // edge id per path
};

inline EdgeAssignment assign_edges(const PathDecomposition& D) {
  EdgeAssignment A;
  A.vertices.push_back({AnchorClass::Kind::boundary_in, kNone, 0});
  A.vertices.push_back({AnchorClass::Kind::boundary_out, kNone, 0});
  for (auto [c, q] : D.charges) {
    A.vertex_of_cell[c] = static_cast<int>(A.vertices.size());
    A.vertices.push_back({AnchorClass::Kind::charge, c, q});
  }
  auto vertex = [&](const AnchorClass& k) {
    if (k.kind == AnchorClass::Kind::boundary_in) return ChargeGraph::kBoundaryIn;
    if (k.kind == AnchorClass::Kind::boundary_out) return ChargeGraph::kBoundaryOut;
    auto it = A.vertex_of_cell.find(k.cell);
    if (it == A.vertex_of_cell.end())
      throw Error(Errc::anchor_mismatch, "path anchored at uncharged cell " + std::to_string(k.cell));
    return it->second;
  };
  std::map<std::pair<int, int>, std::size_t> index;
  std::vector<std::pair<int, int>> per_path;
  for (const LatticePath& P : D.paths) {
    const std::pair<int, int> key{vertex(start_class(P)), vertex(end_class(P))};
    per_path.push_back(key);
    index.emplace(key, 0);
  }
  std::size_t n = 0;
  for (auto& [key, id] : index) {
    id = n++;
    A.edge_ends.push_back(key);
  }
  for (const auto& key : per_path) A.path_edge.push_back(index[key]);
  return A;
}

}  // namespace detail

// Builds the graph and checks anchors against the charges and boundary data
// (B must be the trace on D.boundary_faces).
inline ChargeGraph build_graph(const PathDecomposition& D, const BoundaryData& B, double tol = 1e-6) {
  if (B.flux.size() != D.boundary_faces.size())
    throw Error(Errc::anchor_mismatch, "boundary data does not match the decomposition's boundary");
  detail::EdgeAssignment A = detail::assign_edges(D);
  std::map<FaceId, double> outward;
  for (std::size_t b = 0; b < B.flux.size(); ++b) outward[D.boundary_faces[b]] = B.flux[b];

  ChargeGraph G;
  G.vertices = A.vertices;
  for (auto [u, v] : A.edge_ends) G.edges.push_back({u, v, 0.0, {}});
  for (std::size_t n = 0; n < D.paths.size(); ++n) {
    const LatticePath& P = D.paths[n];
    for (const Anchor* a : {&P.start, &P.end}) {
      if (a->kind == Anchor::Kind::boundary_face) {
        auto it = outward.find(a->id);
        const double expect_sign = (a == &P.start) ? -1.0 : 1.0;
        if (it == outward.end() || it->second * expect_sign <= 0)
          throw Error(Errc::anchor_mismatch, "path boundary anchor disagrees with the boundary data");
      } else {
        const int q = D.charges.at(a->id);
        if ((a == &P.start && q <= 0) || (a == &P.end && q >= 0))
          throw Error(Errc::anchor_mismatch, "path charge anchor has the wrong sign");
      }
    }
    GraphEdge& e = G.edges[A.path_edge[n]];
    e.weight += P.weight;
    e.paths.push_back(n);
  }
  // Boundary totals and vertex balance.
  double in_total = 0, out_total = 0;
  for (double f : B.flux) (f < 0 ? in_total : out_total) += std::abs(f);
  const double scale = std::max(1.0, B.mass());
  if (std::abs(G.out_weight(ChargeGraph::kBoundaryIn) - in_total) > tol * scale ||
      std::abs(G.in_weight(ChargeGraph::kBoundaryOut) - out_total) > tol * scale)
    throw Error(Errc::anchor_mismatch, "boundary vertex totals disagree with the boundary data");
  for (int v = 2; v < static_cast<int>(G.vertices.size()); ++v) {
    const int q = G.vertices[v].charge;
    const double emitted = q > 0 ? G.out_weight(v) : G.in_weight(v);
    if (std::abs(emitted - std::abs(q)) > tol * std::max(1, std::abs(q)))
      throw Error(Errc::anchor_mismatch, "charge vertex balance violated at cell " +
                                             std::to_string(G.vertices[v].cell));
  }
  return G;
}

// Per-path factor: product of the factors of all ops on the path's edge.
inline std::vector<double> path_factors(const PathDecomposition& D, const std::vector<GraphOp>& ops) {
  const detail::EdgeAssignment A = detail::assign_edges(D);
  std::vector<double> edge_factor(A.edge_ends.size(), 1.0);
  for (const GraphOp& op : ops) {
    if (op.edge >= edge_factor.size()) throw Error(Errc::unknown_edge, "edge " + std::to_string(op.edge));
    if (!(std::abs(op.alpha) <= 1.0)) throw Error(Errc::factor_out_of_range, "factor must lie in [-1, 1]");
    edge_factor[op.edge] *= op.alpha;
  }
  std::vector<double> f(D.paths.size());
  for (std::size_t n = 0; n < D.paths.size(); ++n) f[n] = edge_factor[A.path_edge[n]];
  return f;
}

// X with every path replaced by factor·path.
inline FluxField realize(const FluxField& X, const PathDecomposition& D, const std::vector<GraphOp>& ops) {
  const std::vector<double> f = path_factors(D, ops);
  FluxField out = X;
  for (std::size_t n = 0; n < D.paths.size(); ++n) {
    const double dw = (f[n] - 1.0) * D.paths[n].weight;
    if (dw == 0) continue;
    for (const Step& s : D.paths[n].steps) out[s.face] += s.dir * dw;
  }
  return out;
}

// Graph after ops: weights scaled by |α|, edges reversed for α < 0, zero-weight
// edges dropped. Charge labels become the rounded net outflow of each vertex.
inline ChargeGraph apply_ops(const ChargeGraph& G, const std::vector<GraphOp>& ops) {
  std::vector<double> factor(G.edges.size(), 1.0);
  for (const GraphOp& op : ops) {
    if (op.edge >= factor.size()) throw Error(Errc::unknown_edge, "edge " + std::to_string(op.edge));
    if (!(std::abs(op.alpha) <= 1.0)) throw Error(Errc::factor_out_of_range, "factor must lie in [-1, 1]");
    factor[op.edge] *= op.alpha;
  }
  ChargeGraph out;
  out.vertices = G.vertices;
  for (std::size_t e = 0; e < G.edges.size(); ++e) {
    const double w = G.edges[e].weight * factor[e];
    if (w == 0) continue;
    GraphEdge ne = G.edges[e];
    ne.weight = std::abs(w);
    if (w < 0) std::swap(ne.from, ne.to);
    out.edges.push_back(std::move(ne));
  }
  for (int v = 2; v < static_cast<int>(out.vertices.size()); ++v)
    out.vertices[v].charge = static_cast<int>(std::lround(out.out_weight(v) - out.in_weight(v)));
  return out;
}

// Net outflow (out - in) at every charge vertex; this is the interior
// divergence the graph realizes at that cell.
inline std::vector<double> vertex_imbalance(const ChargeGraph& G) {
  std::vector<double> net(G.vertices.size(), 0.0);
  for (const GraphEdge& e : G.edges) {
    net[e.from] += e.weight;
    net[e.to] -= e.weight;
  }
  return net;
}

// Σ over charge vertices of |out-weight - in-weight|: the total interior
// divergence left by the graph. Zero iff the realized field is divergence-free
// at every charge site.
inline double kirchhoff_defect(const ChargeGraph& G) {
  const std::vector<double> net = vertex_imbalance(G);
  double s = 0;
  for (int v = 0; v < static_cast<int>(G.vertices.size()); ++v)
    if (G.is_charge(v)) s += std::abs(net[v]);
  return s;
}

inline void write_dot(std::ostream& os, const ChargeGraph& G, const LatticeDomain* d = nullptr) {
  os << "digraph charges {\n";
  for (int v = 0; v < static_cast<int>(G.vertices.size()); ++v) {
    const GraphVertex& gv = G.vertices[v];
    os << "  v" << v << " [label=\"";
    if (gv.kind == AnchorClass::Kind::boundary_in)
      os << "BoundaryIn";
    else if (gv.kind == AnchorClass::Kind::boundary_out)
      os << "BoundaryOut";
    else {
      os << (gv.charge > 0 ? "+" : "") << gv.charge;
      if (d) {
        const CellIndex& c = d->cells()[gv.cell];
        os << " @" << c.i << "," << c.j << "," << c.k;
      }
    }
    os << "\"];\n";
  }
  for (const GraphEdge& e : G.edges)
    os << "  v" << e.from << " -> v" << e.to << " [label=\"" << format_double(e.weight) << "\"];\n";
  os << "}\n";
}

}  // namespace intflux

#endif  // INTFLUX_CHARGEGRAPH_HPP
