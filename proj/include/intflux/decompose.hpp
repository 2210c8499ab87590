#ifndef INTFLUX_DECOMPOSE_HPP
#define INTFLUX_DECOMPOSE_HPP

// Total decomposition of a face-flux field (viewed as a discrete 1-current)
// into weighted simple paths plus weighted cycles, without cancellation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <queue>
#include <sstream>
#include <utility>
#include <vector>

#include "intflux/field_io.hpp"
#include "intflux/lattice.hpp"

namespace intflux {

// A set of domain cells. Its boundary faces are the classified faces with
// exactly one adjacent cell in the region.
class Region {
 public:
  Region() = default;
  Region(DomainPtr d, std::vector<char> in) : domain_(std::move(d)), in_(std::move(in)) {
    if (in_.size() != domain_->num_cells()) throw Error(Errc::invalid_argument, "region mask size mismatch");
  }
  static Region whole(DomainPtr d) {
    std::vector<char> in(d->num_cells(), 1);
    return Region(std::move(d), std::move(in));
  }
  // Cells whose centers lie within distance r of x0 (and outside r_in when given).
  static Region ball(DomainPtr d, const Vec3& x0, double r, double r_in = -1.0) {
    std::vector<char> in(d->num_cells(), 0);
    for (CellId c = 0; c < static_cast<CellId>(d->num_cells()); ++c) {
      const double dist = (d->center(c) - x0).norm();
      in[c] = dist < r && dist > r_in;
    }
    return Region(std::move(d), std::move(in));
  }

  const LatticeDomain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  bool contains(CellId c) const { return c != kNone && in_[c]; }
  const std::vector<char>& mask() const { return in_; }
  std::size_t size() const { return static_cast<std::size_t>(std::count(in_.begin(), in_.end(), 1)); }

  bool has_face(FaceId f) const {
    const Face& fc = domain_->face(f);
    return contains(fc.minus) || contains(fc.plus);
  }
  bool is_boundary_face(FaceId f) const {
    const Face& fc = domain_->face(f);
    return contains(fc.minus) != contains(fc.plus);
  }
  // +1 if the region cell is on the minus side (outward = +e_axis).
  int outward_sign(FaceId f) const { return contains(domain_->face(f).minus) ? 1 : -1; }

  std::vector<FaceId> boundary_faces() const {
    std::vector<FaceId> out;
    for (FaceId f = 0; f < static_cast<FaceId>(domain_->num_faces()); ++f)
      if (is_boundary_face(f)) out.push_back(f);
    return out;
  }
  std::vector<CellId> cell_list() const {
    std::vector<CellId> out;
    for (CellId c = 0; c < static_cast<CellId>(in_.size()); ++c)
      if (in_[c]) out.push_back(c);
    return out;
  }

 private:
  DomainPtr domain_;
  std::vector<char> in_;
};

// Outward trace of X on the boundary of a region, in region.boundary_faces() order.
inline BoundaryData region_trace(const FluxField& X, const Region& R, double tol = 1e-6) {
  std::vector<double> out;
  for (FaceId f : R.boundary_faces()) out.push_back(R.outward_sign(f) * X[f]);
  return make_boundary_data(std::move(out), tol);
}

inline ChargeSet restrict_charges(const ChargeSet& C, const Region& R) {
  ChargeSet out;
  for (auto [c, q] : C)
    if (R.contains(c)) out.set(c, q);
  return out;
}

struct Anchor {
  enum class Kind { boundary_face, cell };
  Kind kind = Kind::cell;
  std::int32_t id = kNone;
  bool operator==(const Anchor&) const = default;
};

struct Step {
  FaceId face = kNone;
  int dir = 1;  // +1 when crossed in the +e_axis direction
  bool operator==(const Step&) const = default;
};

struct LatticePath {
  double weight = 0;
  std::vector<Step> steps;
  Anchor start, end;
};

struct LatticeCycle {
  double weight = 0;
  std::vector<Step> steps;
};

struct PathDecomposition {
  DomainPtr domain;
  ChargeSet charges;                // charges of the decomposed region
  std::vector<FaceId> boundary_faces;  // region boundary, in region_trace order
  std::vector<LatticePath> paths;
  std::vector<LatticeCycle> cycles;
  FluxField residual;
};

enum class Peeling {
  widest,       // repeatedly peel a max-bottleneck source-to-sink path
  depth_first,  // first path found by a depth-first search; far cheaper on large regions
};

struct DecomposeOptions {
  Peeling peeling = Peeling::widest;
  double charge_tol = 1e-6;     // |divergence - charge| allowed per cell
  double residual_tol = 1e-9;   // residual mass relative to total mass
};

namespace detail {

class Peeler {
 public:
  Peeler(const FluxField& X, const Region& R, const ChargeSet& C, const DecomposeOptions& opt)
      : d_(X.domain()), R_(R), C_(C), opt_(opt), w_(X.values()) {
    for (FaceId f = 0; f < static_cast<FaceId>(w_.size()); ++f)
      if (!R.has_face(f)) w_[f] = 0;
    double mass = 0;
    for (double v : w_) mass += std::abs(v);
    total_mass_ = mass;
    thr_ = 1e-13 * std::max(mass, 1e-300);
    supply_.assign(d_.num_cells(), 0.0);
    for (CellId c = 0; c < static_cast<CellId>(d_.num_cells()); ++c) {
      if (!R.contains(c)) continue;
      double s = 0;
      for (int a = 0; a < 3; ++a) s += w_[d_.cell_face(c, a, 1)] - w_[d_.cell_face(c, a, 0)];
      const int q = C.at(c);
      if (std::abs(s - q) > opt.charge_tol) {
        std::ostringstream os;
        os << "cell " << c << " has divergence " << s << " but charge " << q;
        throw Error(Errc::inconsistent_charges, os.str());
      }
      supply_[c] = q != 0 ? s : 0.0;
    }
    for (auto [c, q] : C)
      if (!R.contains(c)) throw Error(Errc::inconsistent_charges, "charge outside the decomposed region");
    dist_.assign(d_.num_cells(), -1.0);
    pred_.assign(d_.num_cells(), {kNone, 0});
    mark_.assign(d_.num_cells(), 0);
  }

  PathDecomposition run(DomainPtr dom) {
    PathDecomposition D;
    D.domain = dom;
    D.charges = C_;
    D.boundary_faces = R_.boundary_faces();
    while (true) {
      LatticePath P;
      const bool found = opt_.peeling == Peeling::widest ? widest(P) : depth_first(P);
      if (!found) break;
      peel_path(P);
      D.paths.push_back(std::move(P));
    }
    peel_cycles(D.cycles);
    D.residual = FluxField(dom, w_);
    const double res = D.residual.mass();
    if (res > opt_.residual_tol * std::max(total_mass_, 1.0)) {
      std::ostringstream os;
      os << "unpeeled residual mass " << res << " of total " << total_mass_;
      throw Error(Errc::inconsistent_charges, os.str());
    }
    return D;
  }

 private:
  // Oriented flow of face f leaving cell c (positive when it leaves c).
  double out_flow(CellId c, FaceId f) const {
    const Face& fc = d_.face(f);
    return fc.minus == c ? w_[f] : -w_[f];
  }
  CellId across(CellId c, FaceId f) const {
    const Face& fc = d_.face(f);
    const CellId o = fc.minus == c ? fc.plus : fc.minus;
    return R_.contains(o) ? o : kNone;
  }
  bool is_region_boundary(FaceId f) const { return R_.is_boundary_face(f); }
  bool is_source(CellId c) const { return C_.at(c) > 0 && supply_[c] > thr_; }
  bool is_sink(CellId c) const { return C_.at(c) < 0 && supply_[c] < -thr_; }

  // Best sink capacity at c: own demand or the largest outflow boundary face.
  std::pair<double, Anchor> sink_cap(CellId c) const {
    double best = 0;
    Anchor a;
    if (is_sink(c)) {
      best = -supply_[c];
      a = {Anchor::Kind::cell, c};
    }
    for (int ax = 0; ax < 3; ++ax)
      for (int s = 0; s < 2; ++s) {
        const FaceId f = d_.cell_face(c, ax, s);
        if (!is_region_boundary(f)) continue;
        const double o = out_flow(c, f);
        if (o > thr_ && o > best) {
          best = o;
          a = {Anchor::Kind::boundary_face, f};
        }
      }
    return {best, a};
  }

  struct Pred {
    FaceId face;  // face used to enter the cell, or kNone for a cell anchor
    int from;     // previous cell, or -2 for a boundary-face anchor, -1 for a cell anchor
  };

  void build_path(CellId end_cell, const Anchor& end, double width, LatticePath& P) {
    std::vector<Step> rev;
    if (end.kind == Anchor::Kind::boundary_face)
      rev.push_back({end.id, d_.face(end.id).minus == end_cell ? 1 : -1});
    CellId c = end_cell;
    Anchor start{Anchor::Kind::cell, c};
    while (true) {
      const Pred p = pred_[c];
      if (p.face == kNone) {
        start = {Anchor::Kind::cell, c};
        break;
      }
      const Face& fc = d_.face(p.face);
      rev.push_back({p.face, fc.plus == c ? 1 : -1});
      if (p.from == -2) {
        start = {Anchor::Kind::boundary_face, p.face};
        break;
      }
      c = p.from;
    }
    P.steps.assign(rev.rbegin(), rev.rend());
    P.start = start;
    P.end = end;
    P.weight = width;
  }

  bool widest(LatticePath& P) {
    using Item = std::pair<double, CellId>;
    auto cmp = [](const Item& a, const Item& b) {
      return a.first < b.first || (a.first == b.first && a.second > b.second);
    };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> pq(cmp);
    for (CellId c : touched_) dist_[c] = -1.0;
    touched_.clear();
    auto offer = [&](CellId c, double width, Pred p) {
      if (width > dist_[c]) {
        if (dist_[c] < 0) touched_.push_back(c);
        dist_[c] = width;
        pred_[c] = p;
        pq.push({width, c});
      }
    };
    for (CellId c = 0; c < static_cast<CellId>(d_.num_cells()); ++c) {
      if (!R_.contains(c)) continue;
      if (is_source(c)) offer(c, supply_[c], {kNone, -1});
      for (int ax = 0; ax < 3; ++ax)
        for (int s = 0; s < 2; ++s) {
          const FaceId f = d_.cell_face(c, ax, s);
          if (!is_region_boundary(f)) continue;
          const double in = -out_flow(c, f);
          if (in > thr_) offer(c, in, {f, -2});
        }
    }
    double best = 0;
    CellId best_cell = kNone;
    Anchor best_end;
    while (!pq.empty()) {
      auto [width, u] = pq.top();
      pq.pop();
      if (width < dist_[u]) continue;
      if (width <= best) break;
      auto [cap, anchor] = sink_cap(u);
      const double wpath = std::min(width, cap);
      if (cap > thr_ && wpath > best) {
        best = wpath;
        best_cell = u;
        best_end = anchor;
      }
      for (int ax = 0; ax < 3; ++ax)
        for (int s = 0; s < 2; ++s) {
          const FaceId f = d_.cell_face(u, ax, s);
          const CellId v = across(u, f);
          if (v == kNone) continue;
          const double o = out_flow(u, f);
          if (o > thr_) offer(v, std::min(width, o), {f, u});
        }
    }
    if (best_cell == kNone) return false;
    build_path(best_cell, best_end, best, P);
    // The bottleneck along the reconstructed path equals `best` by construction.
    return true;
  }

  bool depth_first(LatticePath& P) {
    while (true) {
      // First available start in deterministic order.
      CellId start_cell = kNone;
      Pred start_pred{kNone, -1};
      double start_cap = 0;
      for (; dfs_cursor_ < static_cast<CellId>(d_.num_cells()); ++dfs_cursor_) {
        const CellId c = dfs_cursor_;
        if (!R_.contains(c)) continue;
        if (is_source(c)) {
          start_cell = c;
          start_cap = supply_[c];
          break;
        }
        for (int ax = 0; ax < 3 && start_cell == kNone; ++ax)
          for (int s = 0; s < 2; ++s) {
            const FaceId f = d_.cell_face(c, ax, s);
            if (!is_region_boundary(f)) continue;
            const double in = -out_flow(c, f);
            if (in > thr_) {
              start_cell = c;
              start_pred = {f, -2};
              start_cap = in;
              break;
            }
          }
        if (start_cell != kNone) break;
      }
      if (start_cell == kNone) return false;

      ++generation_;
      std::vector<std::pair<CellId, int>> stack;  // cell, next face slot to try
      mark_[start_cell] = generation_;
      pred_[start_cell] = start_pred;
      stack.push_back({start_cell, 0});
      while (!stack.empty()) {
        auto& [u, slot] = stack.back();
        if (slot == 0) {
          auto [cap, anchor] = sink_cap(u);
          if (cap > thr_) {
            // Width is the bottleneck over the stack.
            double width = std::min(start_cap, cap);
            for (std::size_t n = 1; n < stack.size(); ++n) {
              const Pred& p = pred_[stack[n].first];
              width = std::min(width, out_flow(stack[n - 1].first, p.face));
            }
            build_path(u, anchor, width, P);
            return true;
          }
        }
        if (slot >= 6) {
          stack.pop_back();
          continue;
        }
        const int ax = slot / 2, s = slot % 2;
        ++slot;
        const FaceId f = d_.cell_face(u, ax, s);
        const CellId v = across(u, f);
        if (v == kNone || mark_[v] == generation_ || out_flow(u, f) <= thr_) continue;
        mark_[v] = generation_;
        pred_[v] = {f, u};
        stack.push_back({v, 0});
      }
      // Start could not reach a sink (only possible through rounding): drop it.
      if (start_pred.face == kNone)
        supply_[start_cell] = 0;
      else
        ++dfs_cursor_;
    }
  }

  void peel_path(const LatticePath& P) {
    for (const Step& s : P.steps) {
      w_[s.face] -= s.dir * P.weight;
      if (s.dir * w_[s.face] < 0 && std::abs(w_[s.face]) <= thr_) w_[s.face] = 0;
    }
    if (P.start.kind == Anchor::Kind::cell) supply_[P.start.id] -= P.weight;
    if (P.end.kind == Anchor::Kind::cell) supply_[P.end.id] += P.weight;
  }

  void peel_cycles(std::vector<LatticeCycle>& cycles) {
    // Walk forward along positive arcs until a cell repeats, then peel the loop.
    std::vector<std::pair<std::uint32_t, int>> at(d_.num_cells(), {0, 0});
    for (FaceId f0 = 0; f0 < static_cast<FaceId>(w_.size()); ++f0) {
      while (std::abs(w_[f0]) > thr_ && R_.has_face(f0) && !is_region_boundary(f0)) {
        const Face& fc = d_.face(f0);
        const int dir0 = w_[f0] > 0 ? 1 : -1;
        ++generation_;
        std::vector<Step> walk{{f0, dir0}};
        at[dir0 > 0 ? fc.minus : fc.plus] = {generation_, 0};
        CellId u = dir0 > 0 ? fc.plus : fc.minus;
        bool closed = false;
        while (true) {
          if (at[u].first == generation_) {
            std::vector<Step> loop(walk.begin() + at[u].second, walk.end());
            double width = std::abs(w_[loop[0].face]);
            for (const Step& s : loop) width = std::min(width, std::abs(w_[s.face]));
            for (const Step& s : loop) w_[s.face] -= s.dir * width;
            cycles.push_back({width, std::move(loop)});
            closed = true;
            break;
          }
          at[u] = {generation_, static_cast<int>(walk.size())};
          FaceId next = kNone;
          for (int k = 0; k < 6 && next == kNone; ++k) {
            const FaceId f = d_.cell_face(u, k / 2, k % 2);
            if (across(u, f) != kNone && out_flow(u, f) > thr_) next = f;
          }
          if (next == kNone) break;
          walk.push_back({next, d_.face(next).minus == u ? 1 : -1});
          u = across(u, next);
        }
        if (!closed) break;  // dead end: the remainder stays in the residual
      }
    }
  }

  const LatticeDomain& d_;
  const Region& R_;
  const ChargeSet& C_;
  DecomposeOptions opt_;
  std::vector<double> w_;
  std::vector<double> supply_;
  double total_mass_ = 0, thr_ = 0;
  std::vector<double> dist_;
  std::vector<Pred> pred_;
  std::vector<CellId> touched_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t generation_ = 0;
  CellId dfs_cursor_ = 0;
};

}  // namespace detail

inline PathDecomposition decompose(const FluxField& X, const ChargeSet& C, const Region& R,
                                   const DecomposeOptions& opt = {}) {
  detail::Peeler peeler(X, R, C, opt);
  return peeler.run(X.domain_ptr());
}

inline PathDecomposition decompose(const FluxField& X, const ChargeSet& C, const DecomposeOptions& opt = {}) {
  return decompose(X, C, Region::whole(X.domain_ptr()), opt);
}

// Signed superposition with optional per-path factors (missing = 1).
inline FluxField recompose(const PathDecomposition& D, const std::vector<double>* path_factors = nullptr) {
  FluxField X = D.residual.domain_ptr() ? D.residual : FluxField(D.domain);
  for (std::size_t n = 0; n < D.paths.size(); ++n) {
    const double w = D.paths[n].weight * (path_factors ? (*path_factors)[n] : 1.0);
    if (w == 0) continue;
    for (const Step& s : D.paths[n].steps) X[s.face] += s.dir * w;
  }
  for (const LatticeCycle& c : D.cycles)
    for (const Step& s : c.steps) X[s.face] += s.dir * c.weight;
  return X;
}

// Endpoint class of a path anchor.
struct AnchorClass {
  enum class Kind { boundary_in, boundary_out, charge };
  Kind kind;
  CellId cell = kNone;
  auto operator<=>(const AnchorClass&) const = default;
};

inline AnchorClass start_class(const LatticePath& P) {
  if (P.start.kind == Anchor::Kind::boundary_face) return {AnchorClass::Kind::boundary_in, kNone};
  return {AnchorClass::Kind::charge, P.start.id};
}
inline AnchorClass end_class(const LatticePath& P) {
  if (P.end.kind == Anchor::Kind::boundary_face) return {AnchorClass::Kind::boundary_out, kNone};
  return {AnchorClass::Kind::charge, P.end.id};
}

using ClassSelector = std::function<bool(const AnchorClass& start, const AnchorClass& end)>;

inline void reverse_path(LatticePath& P) {
  std::reverse(P.steps.begin(), P.steps.end());
  for (Step& s : P.steps) s.dir = -s.dir;
  std::swap(P.start, P.end);
}

inline PathDecomposition apply_elementary_op(const PathDecomposition& D, const ClassSelector& selector,
                                             double alpha) {
  if (!(alpha >= -1.0 && alpha <= 1.0)) throw Error(Errc::factor_out_of_range, "factor must lie in [-1, 1]");
  PathDecomposition out = D;
  std::vector<LatticePath> kept;
  for (LatticePath& P : out.paths) {
    if (selector(start_class(P), end_class(P))) {
      if (alpha == 0) continue;
      P.weight *= std::abs(alpha);
      if (alpha < 0) reverse_path(P);
    }
    kept.push_back(std::move(P));
  }
  out.paths = std::move(kept);
  return out;
}

namespace detail {
inline std::string anchor_token(const LatticeDomain& d, const Anchor& a) {
  std::ostringstream os;
  if (a.kind == Anchor::Kind::boundary_face) {
    const Face& f = d.face(a.id);
    os << 'b' << f.axis << ':' << f.pos.i << ':' << f.pos.j << ':' << f.pos.k;
  } else {
    const CellIndex& c = d.cells()[a.id];
    os << 'c' << c.i << ':' << c.j << ':' << c.k;
  }
  return os.str();
}
inline void write_steps(std::ostream& os, const LatticeDomain& d, const std::vector<Step>& steps) {
  os << ' ' << steps.size();
  for (const Step& s : steps) {
    const Face& f = d.face(s.face);
    os << ' ' << (s.dir > 0 ? '+' : '-') << f.axis << ':' << f.pos.i << ':' << f.pos.j << ':' << f.pos.k;
  }
}
}  // namespace detail

// Dump: `P w anchorA anchorB n face...` and `C w n face...`; faces are written
// as ±axis:i:j:k with the sign giving the traversal direction.
inline void write_decomposition(std::ostream& os, const PathDecomposition& D) {
  const LatticeDomain& d = *D.domain;
  for (const LatticePath& P : D.paths) {
    os << "P " << format_double(P.weight) << ' ' << detail::anchor_token(d, P.start) << ' '
       << detail::anchor_token(d, P.end);
    detail::write_steps(os, d, P.steps);
    os << '\n';
  }
  for (const LatticeCycle& C : D.cycles) {
    os << "C " << format_double(C.weight);
    detail::write_steps(os, d, C.steps);
    os << '\n';
  }
}

}  // namespace intflux

#endif  // INTFLUX_DECOMPOSE_HPP
