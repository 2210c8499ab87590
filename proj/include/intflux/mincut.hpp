#ifndef INTFLUX_MINCUT_HPP
#define INTFLUX_MINCUT_HPP

// Max-flow / min-cut on real capacities and the charge-elimination procedure.
//
// Max flow uses Dinic's algorithm (shortest augmenting paths in phases), which
// terminates on real-valued capacities. Graphs may be treated as undirected,
// in which case each edge carries flow in either direction up to its weight
// and the reported edge flow is signed along the edge orientation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <vector>

#include "intflux/chargegraph.hpp"

namespace intflux {

struct FlowResult {
  double value = 0;
  std::vector<double> edge_flow;  // signed along edge orientation
};

struct CutResult {
  double value = 0;
  std::vector<std::size_t> cut_edges;
  std::vector<char> side;  // 1 = source side
};

struct FlowOptions {
  bool undirected = false;
};

namespace detail {

class Dinic {
 public:
  explicit Dinic(int n) : n_(n), adj_(n) {}

  // Returns the index of the forward arc.
  int add(int u, int v, double cap_uv, double cap_vu) {
    const int id = static_cast<int>(to_.size());
    to_.push_back(v);
    cap_.push_back(cap_uv);
    adj_[u].push_back(id);
    to_.push_back(u);
    cap_.push_back(cap_vu);
    adj_[v].push_back(id + 1);
    return id;
  }

  double run(int s, int t, double eps) {
    eps_ = eps;
    double total = 0;
    while (bfs(s, t)) {
      it_.assign(n_, 0);
      while (true) {
        const double f = dfs(s, t, std::numeric_limits<double>::infinity());
        if (f <= eps_) break;
        total += f;
      }
    }
    return total;
  }

  double residual(int arc) const { return cap_[arc]; }
  int head(int arc) const { return to_[arc]; }
  const std::vector<int>& arcs(int u) const { return adj_[u]; }

  std::vector<char> reachable(int s) const {
    std::vector<char> seen(n_, 0);
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int a : adj_[u])
        if (cap_[a] > eps_ && !seen[to_[a]]) {
          seen[to_[a]] = 1;
          q.push(to_[a]);
        }
    }
    return seen;
  }

 private:
  bool bfs(int s, int t) {
    level_.assign(n_, -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int a : adj_[u])
        if (cap_[a] > eps_ && level_[to_[a]] < 0) {
          level_[to_[a]] = level_[u] + 1;
          q.push(to_[a]);
        }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double pushed) {
    if (u == t) return pushed;
    for (std::size_t& i = it_[u]; i < adj_[u].size(); ++i) {
      const int a = adj_[u][i];
      const int v = to_[a];
      if (cap_[a] <= eps_ || level_[v] != level_[u] + 1) continue;
      const double f = dfs(v, t, std::min(pushed, cap_[a]));
      if (f > eps_) {
        cap_[a] -= f;
        cap_[a ^ 1] += f;
        return f;
      }
    }
    return 0;
  }

  int n_;
  double eps_ = 0;
  std::vector<std::vector<int>> adj_;
  std::vector<int> to_;
  std::vector<double> cap_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
};

struct FlowRun {
  Dinic net;
  std::vector<int> arc;  // forward arc per graph edge
  int s, t;
  double value;
};

inline FlowRun run_flow(const ChargeGraph& G, const std::vector<int>& sources, const std::vector<int>& sinks,
                        const FlowOptions& opt) {
  if (sources.empty() || sinks.empty()) throw Error(Errc::empty_terminal_set, "sources and sinks must be nonempty");
  const int n = static_cast<int>(G.vertices.size());
  std::vector<char> role(n, 0);
  for (int s : sources) role.at(s) |= 1;
  for (int t : sinks) {
    if (role.at(t) & 1) throw Error(Errc::invalid_argument, "sources and sinks must be disjoint");
    role[t] |= 2;
  }
  double cap_max = 0, cap_sum = 0;
  for (const GraphEdge& e : G.edges) {
    cap_max = std::max(cap_max, e.weight);
    cap_sum += e.weight;
  }
  FlowRun R{Dinic(n + 2), {}, n, n + 1, 0};
  for (const GraphEdge& e : G.edges)
    R.arc.push_back(R.net.add(e.from, e.to, e.weight, opt.undirected ? e.weight : 0.0));
  const double big = 2.0 * cap_sum + 1.0;
  for (int s : sources) R.net.add(R.s, s, big, 0);
  for (int t : sinks) R.net.add(t, R.t, big, 0);
  R.value = R.net.run(R.s, R.t, 1e-14 * std::max(cap_max, 1e-300));
  return R;
}

}  // namespace detail

inline FlowResult max_flow(const ChargeGraph& G, const std::vector<int>& sources, const std::vector<int>& sinks,
                           const FlowOptions& opt = {}) {
  detail::FlowRun R = detail::run_flow(G, sources, sinks, opt);
  FlowResult out;
  out.value = R.value;
  for (std::size_t e = 0; e < G.edges.size(); ++e) {
    const double w = G.edges[e].weight;
    // Forward residual = w - f (directed) or w - f (undirected, f signed).
    out.edge_flow.push_back(w - R.net.residual(R.arc[e]));
  }
  return out;
}

inline double cut_value(const ChargeGraph& G, const std::vector<char>& side, bool undirected) {
  double v = 0;
  for (const GraphEdge& e : G.edges)
    if ((side[e.from] && !side[e.to]) || (undirected && !side[e.from] && side[e.to])) v += e.weight;
  return v;
}

// Minimum cut with the inclusion-minimal source side (vertices reachable
// from the sources in the final residual network). This side is contained in
// every other minimum cut's source side, which makes the choice canonical.
inline CutResult min_cut(const ChargeGraph& G, const std::vector<int>& sources, const std::vector<int>& sinks,
                         const FlowOptions& opt = {}) {
  detail::FlowRun R = detail::run_flow(G, sources, sinks, opt);
  const std::vector<char> reach = R.net.reachable(R.s);
  CutResult cut;
  cut.side.assign(G.vertices.size(), 0);
  for (std::size_t v = 0; v < G.vertices.size(); ++v) cut.side[v] = reach[v];
  for (std::size_t e = 0; e < G.edges.size(); ++e) {
    const GraphEdge& ge = G.edges[e];
    const bool forward = cut.side[ge.from] && !cut.side[ge.to];
    const bool backward = opt.undirected && !cut.side[ge.from] && cut.side[ge.to];
    if (forward || backward) {
      cut.cut_edges.push_back(e);
      cut.value += ge.weight;
    }
  }
  return cut;
}

// ---------------------------------------------------------------------------
// Charge elimination.

enum class EliminationCase {
  no_charges,
  everything_used,   // case (2): the flow uses every edge, nothing left over
  sigma_minus_cut,   // case (3): σ^± saturated, leftover lies on charge-charge edges
};

struct EliminationResult {
  std::vector<GraphOp> ops;
  ChargeGraph graph;  // the op-applied graph
  bool energy_decreased = false;
  EliminationCase which = EliminationCase::no_charges;
  double flow_value = 0;
  CutResult cut;  // canonical minimum cut between the boundary sign classes
};

struct EliminationOptions {
  double tol = 1e-9;
};

inline double boundary_mass(const ChargeGraph& G) {
  return G.out_weight(ChargeGraph::kBoundaryIn) + G.in_weight(ChargeGraph::kBoundaryOut);
}

inline EliminationResult eliminate_charges(const ChargeGraph& G, const EliminationOptions& opt = {}) {
  const double in_total = G.out_weight(ChargeGraph::kBoundaryIn);
  const double out_total = G.in_weight(ChargeGraph::kBoundaryOut);
  if (!(in_total + out_total < 1.0))
    throw Error(Errc::hypothesis_violated, "boundary mass " + std::to_string(in_total + out_total) + " is not below 1");
  if (std::abs(out_total - in_total) > opt.tol)
    throw Error(Errc::hypothesis_violated, "boundary degree is not zero");

  EliminationResult res;
  bool any_charge = false;
  for (int v = 0; v < static_cast<int>(G.vertices.size()); ++v) any_charge |= G.is_charge(v);
  if (!any_charge) {
    res.graph = G;
    return res;
  }

  // Edges straight from BoundaryIn to BoundaryOut are kept as they are; the
  // flow runs on the rest, viewed as an undirected graph.
  ChargeGraph H = G;
  for (GraphEdge& e : H.edges)
    if (e.from == ChargeGraph::kBoundaryIn && e.to == ChargeGraph::kBoundaryOut) e.weight = 0;
  const FlowOptions undirected{true};
  const FlowResult F = max_flow(H, {ChargeGraph::kBoundaryIn}, {ChargeGraph::kBoundaryOut}, undirected);
  res.cut = min_cut(H, {ChargeGraph::kBoundaryIn}, {ChargeGraph::kBoundaryOut}, undirected);
  res.flow_value = F.value;

  const double sigma_plus = H.out_weight(ChargeGraph::kBoundaryIn);
  if (std::abs(F.value - sigma_plus) > opt.tol * std::max(1.0, sigma_plus))
    throw Error(Errc::hypothesis_violated,
                "maximal flow does not saturate the boundary arrows (a charge would stay attached to the boundary)");

  bool leftover = false;
  for (std::size_t e = 0; e < G.edges.size(); ++e) {
    const GraphEdge& ge = G.edges[e];
    if (ge.from == ChargeGraph::kBoundaryIn && ge.to == ChargeGraph::kBoundaryOut) continue;
    double alpha = ge.weight > 0 ? F.edge_flow[e] / ge.weight : 0.0;
    alpha = std::clamp(alpha, -1.0, 1.0);
    if (std::abs(alpha) > 1.0 - 1e-15 && std::abs(std::abs(F.edge_flow[e]) - ge.weight) <= opt.tol * 1e-3)
      alpha = alpha > 0 ? 1.0 : -1.0;
    const bool touches_boundary = ge.from == ChargeGraph::kBoundaryIn || ge.to == ChargeGraph::kBoundaryOut;
    if (std::abs(alpha) < 1.0) {
      if (touches_boundary && ge.weight * (1.0 - std::abs(alpha)) > opt.tol)
        throw Error(Errc::hypothesis_violated, "leftover on a boundary arrow");
      leftover = true;
      res.energy_decreased = res.energy_decreased || ge.weight > 0;
    }
    if (alpha != 1.0) res.ops.push_back({e, alpha});
  }
  res.graph = apply_ops(G, res.ops);
  res.which = leftover ? EliminationCase::sigma_minus_cut : EliminationCase::everything_used;
  if (kirchhoff_defect(res.graph) > opt.tol * std::max<std::size_t>(1, G.vertices.size()))
    throw Error(Errc::hypothesis_violated, "eliminated graph violates Kirchhoff's law");
  return res;
}

// ---------------------------------------------------------------------------
// Generic-case lemma.

// Vertex groups of the lemma's diagram. Edge groups are derived:
//   a: Σ+ → C−,  b: Σ+ → C̄−,  c: C+ → C̄−,  d: C̄+ → C−,
//   e: C+ → Σ−,  f: C̄+ → Σ−,  plus C+ → C− and C̄+ → C̄−.
struct GenericCaseGroups {
  std::vector<int> c_minus, c_plus, cbar_minus, cbar_plus;
};

struct GenericCaseEdges {
  std::vector<std::size_t> a, b, c, d, e, f, nu, nubar;
};

inline GenericCaseEdges classify_generic_case(const ChargeGraph& G, const GenericCaseGroups& grp) {
  const int n = static_cast<int>(G.vertices.size());
  std::vector<int> role(n, -1);  // 0 Σ+, 1 Σ−, 2 C−, 3 C+, 4 C̄−, 5 C̄+
  role[ChargeGraph::kBoundaryIn] = 0;
  role[ChargeGraph::kBoundaryOut] = 1;
  auto put = [&](const std::vector<int>& vs, int r) {
    for (int v : vs) {
      if (v < 2 || v >= n || role[v] != -1) throw Error(Errc::shape_mismatch, "bad vertex grouping");
      role[v] = r;
    }
  };
  put(grp.c_minus, 2);
  put(grp.c_plus, 3);
  put(grp.cbar_minus, 4);
  put(grp.cbar_plus, 5);
  GenericCaseEdges E;
  for (std::size_t e = 0; e < G.edges.size(); ++e) {
    const int u = role[G.edges[e].from], v = role[G.edges[e].to];
    if (u < 0 || v < 0) throw Error(Errc::shape_mismatch, "edge touches an ungrouped vertex");
    const int key = 10 * u + v;
    switch (key) {
      case 2: E.a.push_back(e); break;   // Σ+ → C−
      case 4: E.b.push_back(e); break;   // Σ+ → C̄−
      case 34: E.c.push_back(e); break;  // C+ → C̄−
      case 52: E.d.push_back(e); break;  // C̄+ → C−
      case 31: E.e.push_back(e); break;  // C+ → Σ−
      case 51: E.f.push_back(e); break;  // C̄+ → Σ−
      case 32: E.nu.push_back(e); break;
      case 54: E.nubar.push_back(e); break;
      default: throw Error(Errc::shape_mismatch, "edge does not fit the lemma's diagram");
    }
  }
  return E;
}

inline double group_weight(const ChargeGraph& G, const std::vector<std::size_t>& edges) {
  double s = 0;
  for (std::size_t e : edges) s += G.edges[e].weight;
  return s;
}

// Given that {b, c, d, e} is a minimal cut, returns the cut {a, b} and checks
// that it is minimal as well and that |d| = 0.
inline CutResult generic_case_cut(const ChargeGraph& G, const GenericCaseGroups& grp, double tol = 1e-9) {
  const GenericCaseEdges E = classify_generic_case(G, grp);
  const double a = group_weight(G, E.a), b = group_weight(G, E.b), c = group_weight(G, E.c),
               d = group_weight(G, E.d), e = group_weight(G, E.e), f = group_weight(G, E.f);
  if (!(a + b < 0.5) || std::abs((a + b) - (e + f)) > tol)
    throw Error(Errc::hypothesis_violated, "lemma requires |a|+|b| = |e|+|f| < 1/2");
  const FlowOptions undirected{true};
  const CutResult best = min_cut(G, {ChargeGraph::kBoundaryIn}, {ChargeGraph::kBoundaryOut}, undirected);
  if (std::abs((b + c + d + e) - best.value) > tol)
    throw Error(Errc::hypothesis_violated, "{b,c,d,e} is not a minimal cut");

  CutResult out;
  out.side.assign(G.vertices.size(), 0);
  out.side[ChargeGraph::kBoundaryIn] = 1;
  out.cut_edges = E.a;
  out.cut_edges.insert(out.cut_edges.end(), E.b.begin(), E.b.end());
  std::sort(out.cut_edges.begin(), out.cut_edges.end());
  out.value = a + b;
  if (std::abs(out.value - best.value) > tol)
    throw Error(Errc::hypothesis_violated, "cut {a,b} is not minimal; the lemma's hypotheses fail");
  if (d > tol) throw Error(Errc::hypothesis_violated, "|d| > 0 contradicts the lemma");
  return out;
}

}  // namespace intflux

#endif  // INTFLUX_MINCUT_HPP
