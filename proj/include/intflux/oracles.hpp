#ifndef INTFLUX_ORACLES_HPP
#define INTFLUX_ORACLES_HPP

// Independent reference computations and random instance generators used by
// the verification suites and the test binaries.

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <vector>

#include "intflux/chargegraph.hpp"
#include "intflux/lattice.hpp"
#include "intflux/mincut.hpp"

namespace intflux::oracle {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Minimum s-t cut by enumeration of every vertex 2-partition with the
// sources on one side and the sinks on the other. Exponential; meant for
// graphs of at most ~16 free vertices.
inline double brute_force_min_cut(const ChargeGraph& G, const std::vector<int>& sources, const std::vector<int>& sinks,
                                  bool undirected) {
  const int n = static_cast<int>(G.vertices.size());
  std::vector<int> fixed(n, -1);
  for (int s : sources) fixed[s] = 1;
  for (int t : sinks) fixed[t] = 0;
  std::vector<int> free_vertices;
  for (int v = 0; v < n; ++v)
    if (fixed[v] < 0) free_vertices.push_back(v);
  const std::size_t m = free_vertices.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> side(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    for (int v = 0; v < n; ++v) side[v] = fixed[v];
    for (std::size_t k = 0; k < m; ++k) side[free_vertices[k]] = (mask >> k) & 1;
    double v = 0;
    for (const GraphEdge& e : G.edges) {
      if (side[e.from] == 1 && side[e.to] == 0) v += e.weight;
      if (undirected && side[e.from] == 0 && side[e.to] == 1) v += e.weight;
    }
    best = std::min(best, v);
  }
  return best;
}

inline ChargeGraph empty_graph(int charge_vertices) {
  ChargeGraph G;
  G.vertices.push_back({AnchorClass::Kind::boundary_in, kNone, 0});
  G.vertices.push_back({AnchorClass::Kind::boundary_out, kNone, 0});
  for (int v = 0; v < charge_vertices; ++v) G.vertices.push_back({AnchorClass::Kind::charge, kNone, 0});
  return G;
}

inline void add_edge(ChargeGraph& G, int from, int to, double w) { G.edges.push_back({from, to, w, {}}); }

// Random weighted digraph on 3..max_vertices vertices. Vertex 0 is the
// source and vertex 1 the sink.
inline ChargeGraph random_graph(Rng& rng, int max_vertices = 12) {
  const int n = uniform_int(rng, 3, max_vertices);
  ChargeGraph G = empty_graph(n - 2);
  const double density = uniform(rng, 0.15, 0.6);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && uniform(rng, 0, 1) < density) add_edge(G, u, v, uniform(rng, 0.0, 1.0));
  if (G.edges.empty()) add_edge(G, 0, 1, uniform(rng, 0.0, 1.0));
  return G;
}

// The five-charge example: P1 (+1), P2 (+2), N1..N3 (-1). Every charge
// receives/emits 1/8 through the boundary except P2, which emits 2/8; the
// remaining weight 7/8 sits on P1→N1, P2→N2 and P2→N3. The boundary-to-
// boundary maximal flow is 3/8.
struct FigureInstance {
  ChargeGraph graph;
  double expected_flow = 3.0 / 8.0;
};

inline FigureInstance figure_instance() {
  FigureInstance F;
  ChargeGraph& G = F.graph;
  G = empty_graph(5);
  const int P1 = 2, P2 = 3, N1 = 4, N2 = 5, N3 = 6;
  G.vertices[P1].charge = 1;
  G.vertices[P2].charge = 2;
  for (int v : {N1, N2, N3}) G.vertices[v].charge = -1;
  for (int v : {N1, N2, N3}) add_edge(G, ChargeGraph::kBoundaryIn, v, 1.0 / 8);
  add_edge(G, P1, ChargeGraph::kBoundaryOut, 1.0 / 8);
  add_edge(G, P2, ChargeGraph::kBoundaryOut, 2.0 / 8);
  add_edge(G, P1, N1, 7.0 / 8);
  add_edge(G, P2, N2, 7.0 / 8);
  add_edge(G, P2, N3, 7.0 / 8);
  return F;
}

// Instance of the generic-case diagram with unit charges C−, C+, C̄−, C̄+
// (vertices 2..5). Group weights are split over 1..3 parallel edges.
struct GenericInstance {
  ChargeGraph graph;
  GenericCaseGroups groups{{2}, {3}, {4}, {5}};
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
};

namespace detail {
inline void add_split(ChargeGraph& G, Rng& rng, int from, int to, double w) {
  const int parts = uniform_int(rng, 1, 3);
  std::vector<double> cuts{0.0, 1.0};
  for (int k = 1; k < parts; ++k) cuts.push_back(uniform(rng, 0, 1));
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) add_edge(G, from, to, w * (cuts[k + 1] - cuts[k]));
}
}  // namespace detail

// Charge balance at the four vertices forces a + d = c + e and f = b + c - d,
// hence |a| + |b| = |e| + |f|. With probability 1/4 d is drawn positive, which
// the lemma says cannot coexist with {b,c,d,e} being minimal.
inline GenericInstance random_generic_instance(Rng& rng) {
  GenericInstance I;
  for (;;) {
    I.b = uniform(rng, 0, 0.2);
    I.c = uniform(rng, 0, 0.15);
    I.e = uniform(rng, 0, 0.15);
    I.d = uniform(rng, 0, 1) < 0.25 ? uniform(rng, 0, 0.1) : 0.0;
    I.a = I.c + I.e - I.d;
    I.f = I.b + I.c - I.d;
    if (I.a >= 0 && I.f >= 0 && I.a + I.b < 0.5) break;
  }
  ChargeGraph& G = I.graph;
  G = empty_graph(4);
  const int Cm = 2, Cp = 3, Dm = 4, Dp = 5;
  G.vertices[Cm].charge = -1;
  G.vertices[Cp].charge = 1;
  G.vertices[Dm].charge = -1;
  G.vertices[Dp].charge = 1;
  const int In = ChargeGraph::kBoundaryIn, Out = ChargeGraph::kBoundaryOut;
  detail::add_split(G, rng, In, Cm, I.a);
  detail::add_split(G, rng, In, Dm, I.b);
  detail::add_split(G, rng, Cp, Dm, I.c);
  detail::add_split(G, rng, Dp, Cm, I.d);
  detail::add_split(G, rng, Cp, Out, I.e);
  detail::add_split(G, rng, Dp, Out, I.f);
  detail::add_split(G, rng, Cp, Cm, 1.0 - I.a - I.d);
  detail::add_split(G, rng, Dp, Dm, 1.0 - I.b - I.c);
  return I;
}

// True when {b,c,d,e} (source side {Σ+, C−, C+}) is a minimum undirected cut,
// checked against enumeration.
inline bool bcde_is_minimal(const GenericInstance& I, double tol = 1e-12) {
  const double best = brute_force_min_cut(I.graph, {ChargeGraph::kBoundaryIn}, {ChargeGraph::kBoundaryOut}, true);
  return I.b + I.c + I.d + I.e <= best + tol;
}

// ---------------------------------------------------------------------------
// Random integer-charge fields built from lattice paths.

struct RandomField {
  FluxField field;
  ChargeSet charges;
  double boundary_mass = 0;
};

namespace detail {

// Cell path from a to b minimizing a random positive weight per face.
inline std::vector<CellId> random_route(const LatticeDomain& d, Rng& rng, CellId a, CellId b) {
  const std::size_t n = d.num_cells();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<CellId> pred(n, kNone);
  using Item = std::pair<double, CellId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  dist[a] = 0;
  q.push({0.0, a});
  while (!q.empty()) {
    const auto [du, u] = q.top();
    q.pop();
    if (du > dist[u]) continue;
    if (u == b) break;
    for (int k = 0; k < 6; ++k) {
      const CellId v = d.neighbor(u, k / 2, k % 2);
      if (v == kNone) continue;
      const double w = du + uniform(rng, 1.0, 2.0);
      if (w < dist[v]) {
        dist[v] = w;
        pred[v] = u;
        q.push({w, v});
      }
    }
  }
  std::vector<CellId> path{b};
  while (path.back() != a) path.push_back(pred[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

inline FaceId shared_face(const LatticeDomain& d, CellId u, CellId v) {
  for (int k = 0; k < 6; ++k)
    if (d.neighbor(u, k / 2, k % 2) == v) return d.cell_face(u, k / 2, k % 2);
  throw Error(Errc::invalid_argument, "cells are not adjacent");
}

inline void push_route(FluxField& X, const std::vector<CellId>& cells, double w) {
  const LatticeDomain& d = X.domain();
  for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
    const FaceId f = shared_face(d, cells[k], cells[k + 1]);
    X[f] += d.face(f).plus == cells[k + 1] ? w : -w;
  }
}

// Flux w entering (sign -1) or leaving (sign +1) the domain through boundary face f.
inline void push_boundary(FluxField& X, FaceId f, double w, int sign) {
  X[f] += sign * X.domain().face(f).outward_sign() * w;
}

}  // namespace detail

// Random field with 1..max_pairs positive charges (multiplicity 1 or 2) and
// matching unit negative charges, linked by random lattice routes. Every
// charge also exchanges weight s with the boundary, and an extra
// boundary-to-boundary route of weight t is added, with total boundary mass
// kept below mass_cap. Degree is zero.
inline RandomField random_charge_field(const DomainPtr& dom, Rng& rng, int max_pairs = 3, double mass_cap = 0.95) {
  const LatticeDomain& d = *dom;
  const int pos = uniform_int(rng, 1, max_pairs);
  std::vector<int> q_pos(pos);
  int neg = 0;
  for (int& q : q_pos) neg += (q = uniform_int(rng, 0, 3) == 0 ? 2 : 1);

  // Distinct random charge cells.
  std::vector<CellId> cells(d.num_cells());
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = static_cast<CellId>(c);
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<CellId> P(cells.begin(), cells.begin() + pos), Nc(cells.begin() + pos, cells.begin() + pos + neg);

  const double budget = uniform(rng, 0.0, mass_cap);
  const double t = uniform(rng, 0.0, 0.3) * budget;           // boundary-to-boundary weight
  const double s = (budget - 2 * t) / (2.0 * neg);  // per unit of charge
  // Sinkhorn-balanced transport between positive and negative charges with
  // row sums q_i and column sums 1, scaled by 1 - s.
  std::vector<std::vector<double>> M(pos, std::vector<double>(neg));
  for (auto& row : M)
    for (double& v : row) v = uniform(rng, 0.05, 1.0);
  for (int it = 0; it < 500; ++it) {
    for (int i = 0; i < pos; ++i) {
      double r = 0;
      for (double v : M[i]) r += v;
      for (double& v : M[i]) v *= q_pos[i] / r;
    }
    for (int j = 0; j < neg; ++j) {
      double c = 0;
      for (int i = 0; i < pos; ++i) c += M[i][j];
      for (int i = 0; i < pos; ++i) M[i][j] /= c;
    }
  }

  RandomField out{FluxField(dom), ChargeSet{}, 0};
  const auto& bf = d.boundary_faces();
  auto random_boundary = [&] { return bf[uniform_int(rng, 0, static_cast<int>(bf.size()) - 1)]; };
  for (int i = 0; i < pos; ++i) {
    out.charges.set(P[i], q_pos[i]);
    for (int j = 0; j < neg; ++j) detail::push_route(out.field, detail::random_route(d, rng, P[i], Nc[j]), M[i][j] * (1 - s));
    const FaceId f = random_boundary();
    detail::push_route(out.field, detail::random_route(d, rng, P[i], d.face(f).inside_cell()), q_pos[i] * s);
    detail::push_boundary(out.field, f, q_pos[i] * s, +1);
  }
  for (int j = 0; j < neg; ++j) {
    out.charges.set(Nc[j], -1);
    const FaceId f = random_boundary();
    detail::push_boundary(out.field, f, s, -1);
    detail::push_route(out.field, detail::random_route(d, rng, d.face(f).inside_cell(), Nc[j]), s);
  }
  if (t > 0) {
    const FaceId f0 = random_boundary(), f1 = random_boundary();
    detail::push_boundary(out.field, f0, t, -1);
    detail::push_route(out.field, detail::random_route(d, rng, d.face(f0).inside_cell(), d.face(f1).inside_cell()), t);
    detail::push_boundary(out.field, f1, t, +1);
  }
  for (FaceId f : bf) out.boundary_mass += std::abs(out.field[f]);
  return out;
}

}  // namespace intflux::oracle

#endif  // INTFLUX_ORACLES_HPP
