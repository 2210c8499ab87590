#ifndef INTFLUX_SOLVER_HPP
#define INTFLUX_SOLVER_HPP

// Fixed-charge convex p-energy minimization and the outer search over charge
// configurations.
//
// The convex subproblem is solved by majorization-minimization: with the
// regularized density (t + δ²)^{p/2}, concave in t = |X|², each step minimizes
// the quadratic majorizer Σ_f W_f F_f² under the affine constraints, which is
// a weighted cell Laplacian solve. Iterates stay exactly feasible (tree
// correction), and every step is followed by a line search on the true
// regularized energy. δ is driven to delta_rel·(mean |X|) by continuation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "intflux/chargegraph.hpp"
#include "intflux/decompose.hpp"
#include "intflux/lattice.hpp"
#include "intflux/mincut.hpp"
#include "intflux/projector.hpp"

namespace intflux {

struct SolveConfig {
  double p = 1.2;
  double convex_tol = 1e-6;      // Euler-Lagrange residual (Euclidean norm over faces)
  int max_outer_iters = 40;
  std::uint64_t seed = 1;
  double shell_eps = 0.1;        // interpolant thickness
  int max_inner_iters = 400;     // majorization steps per convex solve
  double delta_rel = 1e-6;       // final regularization relative to mean |X|
  int extra_charges = 4;         // cap on created charges beyond |degree|
  int evals_per_iter = 6;        // convex re-solves per outer iteration
  int random_pairs = 4;          // randomly sited pair-creation proposals

  void validate() const {
    check_exponent(p);
    if (!(convex_tol > 0)) throw Error(Errc::invalid_argument, "convex_tol must be positive");
    if (max_outer_iters < 0 || max_inner_iters <= 0) throw Error(Errc::invalid_argument, "iteration caps must be positive");
  }
};

struct ConvexReport {
  double energy = 0;             // unregularized energy of the returned field
  double residual = 0;           // norm of the projected gradient at the final delta
  int iterations = 0;
  double delta = 0;
  bool converged = false;
  std::vector<double> multipliers;  // per cell; d(energy)/d(charge) up to a constant
};

struct ConvexSolution {
  FluxField field;
  ConvexReport report;
};

class NoConvergence : public Error {
 public:
  NoConvergence(ConvexSolution best, const std::string& what)
      : Error(Errc::no_convergence, what), best_(std::move(best)) {}
  const ConvexSolution& best() const { return best_; }

 private:
  ConvexSolution best_;
};

namespace detail {

// Regularized corner-quadrature energy; optionally accumulates the gradient
// and the majorizer weights W (so that the gradient equals 2·W·F).
inline double regularized_energy(const FluxField& X, double p, double delta, std::vector<double>* grad = nullptr,
                                 std::vector<double>* weight = nullptr) {
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size(), inv_area = 1.0 / (h * h), vol8 = h * h * h / 8.0;
  const double d2 = delta * delta, half_p = 0.5 * p;
  if (grad) grad->assign(d.num_faces(), 0.0);
  if (weight) weight->assign(d.num_faces(), 0.0);
  double E = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) {
    FaceId id[3][2];
    double F[3][2], sq[3][2];
    for (int a = 0; a < 3; ++a)
      for (int s = 0; s < 2; ++s) {
        id[a][s] = d.cell_face(c, a, s);
        F[a][s] = X[id[a][s]];
        const double v = F[a][s] * inv_area;
        sq[a][s] = v * v;
      }
    for (int sx = 0; sx < 2; ++sx)
      for (int sy = 0; sy < 2; ++sy)
        for (int sz = 0; sz < 2; ++sz) {
          const double t = sq[0][sx] + sq[1][sy] + sq[2][sz] + d2;
          if (t <= 0) continue;
          const double phi = std::pow(t, half_p);
          E += vol8 * phi;
          if (grad || weight) {
            const double dphi = half_p * phi / t;  // φ'(t)
            const double w = dphi / (8.0 * h);     // vol8 · φ' / h^4
            const int sel[3] = {sx, sy, sz};
            for (int a = 0; a < 3; ++a) {
              const FaceId f = id[a][sel[a]];
              if (weight) (*weight)[f] += w;
              if (grad) (*grad)[f] += 2.0 * w * F[a][sel[a]];
            }
          }
        }
  }
  return E;
}

inline std::vector<double> charge_target(const LatticeDomain& d, const ChargeSet& C) {
  std::vector<double> b(d.num_cells(), 0.0);
  for (auto [c, q] : C) b.at(c) = q;
  return b;
}

}  // namespace detail

// Projected gradient and Lagrange multipliers of the energy regularized with
// delta. The unregularized gradient is only Hölder continuous where a corner
// vector vanishes, so its projected norm decays like delta^{p-1} and cannot
// certify convergence; the solver certifies the final regularized problem.
inline void convex_certificate(FluxProjector& P, const FluxField& X, double p, ConvexReport& rep,
                               double delta = 0.0) {
  const LatticeDomain& d = X.domain();
  std::vector<double> g;
  detail::regularized_energy(X, p, delta, &g, nullptr);
  // rhs = D g over interior faces.
  std::vector<double> rhs(d.num_cells(), 0.0);
  for (FaceId f : d.interior_faces()) {
    const Face& fc = d.face(f);
    rhs[fc.minus] += g[f];
    rhs[fc.plus] -= g[f];
  }
  const std::vector<double> ones(d.interior_faces().size(), 1.0);
  rep.multipliers = P.solve(ones, rhs, 1e-12);
  double r2 = 0;
  for (FaceId f : d.interior_faces()) {
    const Face& fc = d.face(f);
    const double r = g[f] - (rep.multipliers[fc.minus] - rep.multipliers[fc.plus]);
    r2 += r * r;
  }
  rep.residual = std::sqrt(r2);
}

// Convex subproblem; returns the best iterate even when the residual target
// is missed (report.converged tells which).
inline ConvexSolution solve_convex(FluxProjector& P, const BoundaryData& B, const ChargeSet& C,
                                   const SolveConfig& cfg, const FluxField* warm = nullptr) {
  cfg.validate();
  const LatticeDomain& d = P.domain();
  if (C.total() != B.degree) {
    std::ostringstream os;
    os << "charges sum to " << C.total() << " but the boundary degree is " << B.degree;
    throw Error(Errc::infeasible_charges, os.str());
  }
  const std::vector<double> b = detail::charge_target(d, C);
  FluxField X;
  if (warm) {
    X = *warm;
    impose_boundary(X, B);
    // Route the charge change with one unweighted solve, then fix exactly.
    const std::vector<double> div = divergence(X);
    std::vector<double> rhs(d.num_cells());
    bool changed = false;
    for (std::size_t c = 0; c < rhs.size(); ++c) {
      rhs[c] = b[c] - div[c];
      changed |= std::abs(rhs[c]) > 1e-9;
    }
    if (changed) {
      const std::vector<double> ones(d.interior_faces().size(), 1.0);
      const std::vector<double> u = P.solve(ones, rhs);
      FluxField Y(P.domain_ptr());
      P.potential_flux(ones, u, Y);
      X += Y;
    }
    P.correct(X, b);
  } else {
    X = feasible_field(P, B, b);
  }

  ConvexSolution sol;
  const double p = cfg.p;
  double scale = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) scale += cell_vector(X, c).norm();
  scale /= static_cast<double>(d.num_cells());
  if (scale == 0) {
    sol.field = X;
    sol.report.converged = true;
    convex_certificate(P, X, p, sol.report);
    return sol;
  }
  const double delta_min = cfg.delta_rel * scale;
  double delta = warm ? std::max(1e-2 * scale, delta_min) : scale;

  const auto& interior = d.interior_faces();
  // The MM step is solved as an increment from the current multiplier
  // estimate mu: with C = 1/weight and r = g/2 - D^T mu, the step is
  // -C (r - D^T dmu) where (D C D^T) dmu = D C r. The right side shrinks near
  // the optimum, so the relative PCG tolerance applies to the step itself.
  std::vector<double> grad, weight, cond(interior.size()), mu(d.num_cells(), 0.0), rc(interior.size());
  std::vector<double> drhs(d.num_cells());
  int iters = 0;
  while (true) {
    const bool final_level = delta <= delta_min;
    const double level_tol = 1e-5;
    double best_residual = std::numeric_limits<double>::infinity();
    int stalls = 0;
    const int level_cap = final_level ? cfg.max_inner_iters : std::max(8, cfg.max_inner_iters / 8);
    double E = detail::regularized_energy(X, p, delta, &grad, &weight);
    for (int it = 0; it < level_cap && iters < cfg.max_inner_iters * 2; ++it, ++iters) {
      std::fill(drhs.begin(), drhs.end(), 0.0);
      for (std::size_t k = 0; k < interior.size(); ++k) {
        const Face& fc = d.face(interior[k]);
        cond[k] = 1.0 / weight[interior[k]];
        rc[k] = cond[k] * (0.5 * grad[interior[k]] - (mu[fc.minus] - mu[fc.plus]));
        drhs[fc.minus] += rc[k];
        drhs[fc.plus] -= rc[k];
      }
      const std::vector<double> dmu = P.solve(cond, drhs, 1e-10);
      std::vector<double> dir(interior.size());
      for (std::size_t k = 0; k < interior.size(); ++k) {
        const Face& fc = d.face(interior[k]);
        dir[k] = cond[k] * (dmu[fc.minus] - dmu[fc.plus]) - rc[k];
      }
      for (std::size_t c = 0; c < mu.size(); ++c) mu[c] += dmu[c];
      // The step is divergence-free and leaves the boundary alone; line search.
      auto trial = [&](double alpha) {
        FluxField Z = X;
        for (std::size_t k = 0; k < interior.size(); ++k) Z[interior[k]] += alpha * dir[k];
        return Z;
      };
      // Line search on the directional derivative, which stays accurate after
      // energy differences fall below double precision. φ is convex, so any
      // step with φ'(α) <= 0 decreases the energy.
      auto slope = [&](double alpha) {
        detail::regularized_energy(trial(alpha), p, delta, &grad, nullptr);
        double s = 0;
        for (std::size_t k = 0; k < interior.size(); ++k) s += grad[interior[k]] * dir[k];
        return s;
      };
      double best_alpha = 0;
      const double s0 = slope(0.0);
      if (s0 < 0) {
        double lo = 0, s_lo = s0, hi = 0, s_hi = 0;
        for (double alpha = 1.0; alpha <= 16.0; alpha *= 2.0) {
          const double sa = slope(alpha);
          if (sa <= 0) {
            lo = alpha;
            s_lo = sa;
          } else {
            hi = alpha;
            s_hi = sa;
            break;
          }
        }
        // Secant refinement inside the bracket, keeping the descent side.
        for (int k = 0; k < 3 && hi > 0; ++k) {
          const double a = lo - s_lo * (hi - lo) / (s_hi - s_lo);
          if (!(a > lo && a < hi)) break;
          const double sa = slope(a);
          if (sa <= 0) {
            lo = a;
            s_lo = sa;
          } else {
            hi = a;
            s_hi = sa;
          }
        }
        for (int k = 0; k < 30 && lo == 0; ++k) {
          hi *= 0.5;
          if (slope(hi) <= 0) lo = hi;
        }
        best_alpha = lo;
      }
      const double best_E = best_alpha > 0 ? detail::regularized_energy(trial(best_alpha), p, delta) : E;
      if (best_alpha == 0) break;
      X = trial(best_alpha);
      P.correct(X, b);
      const double rel = (E - best_E) / std::max(E, 1e-300);
      E = detail::regularized_energy(X, p, delta, &grad, &weight);
      if (final_level) {
        // Near double-precision stagnation of E the residual is the better
        // stopping signal.
        ConvexReport probe;
        convex_certificate(P, X, p, probe, delta);
        if (probe.residual <= 0.1 * cfg.convex_tol) break;
        // MM iterates alternate around the optimum, so only consecutive
        // non-improving steps count as a stall.
        if (probe.residual < best_residual * 0.98) {
          stalls = 0;
        } else if (++stalls >= 5) {
          break;
        }
        best_residual = std::min(best_residual, probe.residual);
      } else if (rel < level_tol) {
        break;
      }
    }
    if (final_level) break;
    delta = std::max(0.1 * delta, delta_min);
  }
  P.correct(X, b);
  sol.field = X;
  sol.report.iterations = iters;
  sol.report.delta = delta;
  sol.report.energy = energy(X, p);
  convex_certificate(P, X, p, sol.report, delta);
  sol.report.converged = sol.report.residual <= cfg.convex_tol;
  return sol;
}

inline FluxField solve_fixed_charges(const DomainPtr& dom, const BoundaryData& B, const ChargeSet& C,
                                     const SolveConfig& cfg) {
  FluxProjector P(dom);
  ConvexSolution sol = solve_convex(P, B, C, cfg);
  if (!sol.report.converged) {
    std::ostringstream os;
    os << "Euler-Lagrange residual " << sol.report.residual << " above convex_tol " << cfg.convex_tol;
    throw NoConvergence(std::move(sol), os.str());
  }
  return sol.field;
}

// ---------------------------------------------------------------------------
// Outer loop.

struct HistoryEntry {
  int iteration = 0;
  std::string move;
  double energy = 0;
};

struct MinimizeResult {
  FluxField field;
  ChargeSet charges;
  double energy = 0;
  std::vector<HistoryEntry> history;
  bool converged = false;
  double residual = 0;
};

namespace detail {

struct Proposal {
  ChargeSet charges;
  std::string description;
  double estimate = 0;  // lower bound (or exact competitor gain) for the energy change
  int kind = 0;         // 0 move, 1 merge, 2 create, 3 eliminate
  std::optional<FluxField> competitor;
};

inline std::string cell_label(const LatticeDomain& d, CellId c) {
  const CellIndex& x = d.cells()[c];
  std::ostringstream os;
  os << '(' << x.i << ' ' << x.j << ' ' << x.k << ')';
  return os.str();
}

// Cells within Chebyshev distance `reach` of c.
inline std::vector<CellId> cells_near(const LatticeDomain& d, CellId c, int reach) {
  std::vector<CellId> out;
  const CellIndex x = d.cells()[c];
  for (int di = -reach; di <= reach; ++di)
    for (int dj = -reach; dj <= reach; ++dj)
      for (int dk = -reach; dk <= reach; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const CellId n = d.cell_id({x.i + di, x.j + dj, x.k + dk});
        if (n != kNone) out.push_back(n);
      }
  return out;
}

// Charge elimination on small-mass balls around charges.
inline void elimination_proposals(const FluxField& X, const ChargeSet& C, double E, double p,
                                  std::vector<Proposal>& out) {
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size();
  std::vector<std::pair<CellId, double>> tried;
  for (auto [c0, q0] : C) {
    for (double rr : {1.5, 2.5, 3.5, 5.0, 7.0}) {
      const double r = rr * h;
      const Vec3 x0 = d.center(c0);
      if (x0.norm() + r >= d.radius() - h) continue;
      const Region R = Region::ball(X.domain_ptr(), x0, r);
      const ChargeSet Cin = restrict_charges(C, R);
      if (Cin.total() != 0 || Cin.empty()) continue;
      double slice = 0;
      for (FaceId f : R.boundary_faces()) slice += std::abs(X[f]);
      if (!(slice < 1.0)) continue;
      try {
        const BoundaryData Bs = region_trace(X, R, 1e-6);
        const PathDecomposition D = decompose(X, Cin, R);
        const ChargeGraph G = build_graph(D, Bs);
        const EliminationResult res = eliminate_charges(G);
        if (res.ops.empty()) continue;
        FluxField Xbar = realize(X, D, res.ops);
        ChargeSet Cn = C;
        for (auto [c, q] : Cin) Cn.set(c, 0);
        const double Eb = energy(Xbar, p);
        std::ostringstream os;
        os << "eliminate " << Cin.count() << " charges in ball r=" << rr << "h at " << cell_label(d, c0);
        out.push_back({Cn, os.str(), Eb - E, 3, std::move(Xbar)});
        break;  // smallest admissible ball per charge
      } catch (const Error&) {
        continue;
      }
    }
  }
}

inline std::vector<Proposal> generate_proposals(const FluxField& X, const ChargeSet& C,
                                                const std::vector<double>& lambda, const BoundaryData& B,
                                                const SolveConfig& cfg, std::mt19937_64& rng, double E) {
  const LatticeDomain& d = X.domain();
  std::vector<Proposal> out;
  auto lam = [&](CellId c) { return lambda[c]; };

  // Moves: shift one unit of charge to a nearby cell.
  for (auto [c, q] : C) {
    const int s = q > 0 ? 1 : -1;
    for (CellId n : cells_near(d, c, 2)) {
      ChargeSet Cn = C;
      Cn.add(c, -s);
      Cn.add(n, s);
      out.push_back({Cn, "move " + cell_label(d, c) + " -> " + cell_label(d, n), s * (lam(n) - lam(c)), 0, {}});
    }
  }
  // Merges: annihilate one unit of an opposite pair.
  for (auto [a, qa] : C)
    for (auto [b, qb] : C) {
      if (qa <= 0 || qb >= 0) continue;
      ChargeSet Cn = C;
      Cn.add(a, -1);
      Cn.add(b, 1);
      out.push_back({Cn, "merge " + cell_label(d, a) + " + " + cell_label(d, b), lam(b) - lam(a), 1, {}});
    }
  // Pair creation, capped at |degree| + extra_charges charges in total.
  if (C.count() + 2 <= std::abs(B.degree) + cfg.extra_charges) {
    auto add_pair = [&](CellId plus, CellId minus, const std::string& why) {
      if (plus == minus) return;
      ChargeSet Cn = C;
      Cn.add(plus, 1);
      Cn.add(minus, -1);
      out.push_back({Cn, "create " + why + " +" + cell_label(d, plus) + " -" + cell_label(d, minus),
                     lam(plus) - lam(minus), 2, {}});
    };
    // Split the boundary flux: charges under the strongest outflow / inflow.
    const auto& bf = d.boundary_faces();
    std::size_t imax = 0, imin = 0;
    for (std::size_t k = 0; k < B.flux.size(); ++k) {
      if (B.flux[k] > B.flux[imax]) imax = k;
      if (B.flux[k] < B.flux[imin]) imin = k;
    }
    if (!B.flux.empty() && B.flux[imax] > 0 && B.flux[imin] < 0)
      add_pair(d.face(bf[imax]).inside_cell(), d.face(bf[imin]).inside_cell(), "split");
    // Extremes of the multiplier.
    CellId lo = 0, hi = 0;
    for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) {
      if (lambda[c] < lambda[lo]) lo = c;
      if (lambda[c] > lambda[hi]) hi = c;
    }
    add_pair(lo, hi, "extreme");
    // Random adjacent pairs, sited by energy density.
    const std::vector<double> e = cell_energies(X, cfg.p);
    double total = 0;
    for (double v : e) total += v;
    if (total > 0) {
      std::discrete_distribution<std::size_t> pick(e.begin(), e.end());
      std::uniform_int_distribution<int> dir(0, 5);
      for (int k = 0; k < cfg.random_pairs; ++k) {
        const CellId a = static_cast<CellId>(pick(rng));
        const int face = dir(rng);
        const CellId b = d.neighbor(a, face / 2, face % 2);
        if (b == kNone) continue;
        if (lam(a) <= lam(b))
          add_pair(a, b, "random");
        else
          add_pair(b, a, "random");
      }
    }
  }
  elimination_proposals(X, C, E, cfg.p, out);
  return out;
}

}  // namespace detail

inline ChargeSet default_initial_charges(const LatticeDomain& d, int degree) {
  ChargeSet C;
  if (degree == 0) return C;
  CellId best = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c)
    if (d.center(c).norm() < d.center(best).norm() - 1e-12) best = c;
  C.set(best, degree);
  return C;
}

inline MinimizeResult minimize(const DomainPtr& dom, const BoundaryData& B, const SolveConfig& cfg,
                               std::optional<ChargeSet> initial = std::nullopt) {
  cfg.validate();
  FluxProjector P(dom);
  std::mt19937_64 rng(cfg.seed);
  MinimizeResult res;
  ChargeSet C = initial ? *initial : default_initial_charges(*dom, B.degree);
  ConvexSolution cur = solve_convex(P, B, C, cfg);
  res.history.push_back({0, "initial", cur.report.energy});
  const double min_gain = cfg.convex_tol;
  int iter = 0;
  bool improved = true;
  while (improved && iter < cfg.max_outer_iters) {
    ++iter;
    improved = false;
    const double E = cur.report.energy;
    std::vector<detail::Proposal> props =
        detail::generate_proposals(cur.field, C, cur.report.multipliers, B, cfg, rng, E);
    // Convexity of the value function in the charges makes the multiplier
    // estimate a lower bound: proposals with a nonnegative estimate cannot win.
    std::erase_if(props, [&](const detail::Proposal& pr) { return !(pr.estimate < -min_gain); });
    std::stable_sort(props.begin(), props.end(),
                     [](const detail::Proposal& a, const detail::Proposal& b) { return a.estimate < b.estimate; });
    // Evaluate the best proposal of each kind first, then the rest in order.
    std::vector<std::size_t> order;
    std::vector<char> taken(props.size(), 0);
    for (int kind = 3; kind >= 0; --kind)
      for (std::size_t k = 0; k < props.size(); ++k)
        if (props[k].kind == kind) {
          order.push_back(k);
          taken[k] = 1;
          break;
        }
    for (std::size_t k = 0; k < props.size(); ++k)
      if (!taken[k]) order.push_back(k);
    int evals = 0;
    for (std::size_t k : order) {
      if (evals >= cfg.evals_per_iter) break;
      ++evals;
      const detail::Proposal& pr = props[k];
      ConvexSolution trial;
      try {
        trial = solve_convex(P, B, pr.charges, cfg, pr.competitor ? &*pr.competitor : &cur.field);
      } catch (const Error& e) {
        res.history.push_back({iter, "rejected " + pr.description + ": " + e.what(), E});
        continue;
      }
      if (trial.report.energy < E - min_gain) {
        cur = std::move(trial);
        C = pr.charges;
        res.history.push_back({iter, pr.description, cur.report.energy});
        improved = true;
        break;
      }
    }
  }
  res.converged = !improved;
  res.field = cur.field;
  res.charges = C;
  res.energy = cur.report.energy;
  res.residual = cur.report.residual;
  return res;
}

}  // namespace intflux

#endif  // INTFLUX_SOLVER_HPP
