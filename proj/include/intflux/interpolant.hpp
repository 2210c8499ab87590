#ifndef INTFLUX_INTERPOLANT_HPP
#define INTFLUX_INTERPOLANT_HPP

// Cut-off of a field across the shell 1 < |x| < 1 + ε.
//
// The shell part of Y is decomposed into paths and cycles. Paths from the
// outer sphere back to it are dropped, paths crossing the shell are replaced
// by the discrete harmonic (Neumann) field W carrying the same flux through
// the inner sphere and none through the outer one, and inner-to-inner paths
// and cycles are kept. Inside the unit ball nothing changes.

#include <cmath>
#include <limits>
#include <vector>

#include "intflux/chargegraph.hpp"
#include "intflux/decompose.hpp"
#include "intflux/mincut.hpp"
#include "intflux/projector.hpp"
#include "intflux/quadrature.hpp"

namespace intflux {

// Inner boundary faces of a shell domain, in boundary_faces() order.
inline std::vector<FaceId> inner_boundary_faces(const LatticeDomain& shell) {
  std::vector<FaceId> out;
  for (FaceId f : shell.boundary_faces())
    if (shell.face(f).side == BoundarySide::inner) out.push_back(f);
  return out;
}

// Harmonic field on the shell whose flux through inner face k, measured in
// the radial (away from the origin) direction, is g[k]; zero flux through the
// outer sphere. Equivalently its outward trace on the inner sphere is -g.
inline FluxField neumann_interpolant(const DomainPtr& shell, const std::vector<double>& g) {
  if (!shell->is_shell()) throw Error(Errc::invalid_argument, "neumann_interpolant needs a shell domain");
  const std::vector<FaceId> inner = inner_boundary_faces(*shell);
  if (g.size() != inner.size()) throw Error(Errc::shape_mismatch, "g must have one value per inner face");
  double sum = 0, mass = 0;
  for (double v : g) {
    sum += v;
    mass += std::abs(v);
  }
  if (std::abs(sum) > 1e-9 * std::max(1.0, mass))
    throw Error(Errc::incompatible_data, "Neumann data must have zero total flux, got " + format_double(sum));
  FluxField Z(shell);
  if (mass == 0) return Z;
  std::vector<double> outward(shell->boundary_faces().size(), 0.0);
  std::size_t k = 0;
  for (std::size_t b = 0; b < shell->boundary_faces().size(); ++b)
    if (shell->face(shell->boundary_faces()[b]).side == BoundarySide::inner) outward[b] = -g[k++];
  BoundaryData B{std::move(outward), 0};
  FluxProjector P(shell);
  return feasible_field(P, B, std::vector<double>(shell->num_cells(), 0.0));
}

struct InterpolantResult {
  FluxField field;
  double constant = 0;       // measured C in the energy bound
  double norm_before = 0;    // ||Y||_{L^p(shell)}
  double norm_after = 0;     // ||Ybar||_{L^p(shell)}
  double sphere_norm = 0;    // ||Y||_{L^p(∂B_1)}
  double crossing_flux = 0;  // mass of the replaced crossing paths on the inner sphere
};

// Y lives on a ball domain of radius > 1 + ε. Requires zero net flux through
// both spheres and inner-sphere mass below 1/2.
inline InterpolantResult build_interpolant(const FluxField& Y, double eps, double p = 1.2) {
  check_exponent(p);
  const DomainPtr& dom = Y.domain_ptr();
  const LatticeDomain& d = *dom;
  if (!(eps > 0)) throw Error(Errc::invalid_argument, "shell thickness must be positive");
  if (1.0 + eps + d.cell_size() > d.radius())
    throw Error(Errc::invalid_argument, "outer shell sphere must lie inside the domain");
  const Region shell = Region::ball(dom, Vec3::Zero(), 1.0 + eps, 1.0);
  if (shell.size() == 0) throw Error(Errc::invalid_argument, "shell contains no cells");
  auto is_inner_cell = [&](CellId c) { return c != kNone && !shell.contains(c) && d.center(c).norm() <= 1.0; };
  auto is_inner_face = [&](FaceId f) {
    const Face& fc = d.face(f);
    return shell.is_boundary_face(f) && (is_inner_cell(fc.minus) || is_inner_cell(fc.plus));
  };

  // Hypotheses on the slices.
  double net_in = 0, net_out = 0, mass_in = 0;
  for (FaceId f : shell.boundary_faces()) {
    const double v = shell.outward_sign(f) * Y[f];
    if (is_inner_face(f)) {
      net_in += v;
      mass_in += std::abs(v);
    } else {
      net_out += v;
    }
  }
  const double tol = 1e-9 * std::max(1.0, Y.mass());
  if (std::abs(net_in) > tol || std::abs(net_out) > tol)
    throw Error(Errc::hypothesis_violated, "Y must have zero flux through both shell spheres");
  if (!(mass_in < 0.5)) throw Error(Errc::hypothesis_violated, "inner sphere mass must be below 1/2");

  // Remove shell charges first if there are any.
  FluxField X = Y;
  ChargeSet charges = restrict_charges(check_integer_fluxes(Y), shell);
  if (!charges.empty()) {
    const PathDecomposition D0 = decompose(X, charges, shell);
    const ChargeGraph G0 = build_graph(D0, region_trace(X, shell));
    const EliminationResult er = eliminate_charges(G0);
    X = realize(X, D0, er.ops);
    charges = restrict_charges(check_integer_fluxes(X), shell);
    if (!charges.empty()) throw Error(Errc::hypothesis_violated, "shell charges could not be eliminated");
  }

  DecomposeOptions opt;
  opt.peeling = Peeling::depth_first;
  const PathDecomposition D = decompose(X, ChargeSet{}, shell, opt);

  InterpolantResult res;
  FluxField kept(dom), crossing(dom);
  for (const LatticePath& P : D.paths) {
    const bool start_in = is_inner_face(P.start.id), end_in = is_inner_face(P.end.id);
    if (!start_in && !end_in) continue;  // outer to outer: dropped
    FluxField& target = (start_in && end_in) ? kept : crossing;
    for (const Step& s : P.steps) target[s.face] += s.dir * P.weight;
  }
  for (const LatticeCycle& C : D.cycles)
    for (const Step& s : C.steps) kept[s.face] += s.dir * C.weight;

  // Neumann replacement of the crossing part.
  const DomainPtr sd = build_shell(d.resolution(), d.half_width(), 1.0, 1.0 + eps);
  const std::vector<FaceId> sin = inner_boundary_faces(*sd);
  std::vector<double> g(sin.size());
  for (std::size_t k = 0; k < sin.size(); ++k) {
    const Face& sf = sd->face(sin[k]);
    const FaceId f = d.face_id(sf.axis, sf.pos);
    // Radial direction is minus the shell's outward normal.
    g[k] = -sf.outward_sign() * crossing[f];
    res.crossing_flux += std::abs(crossing[f]);
  }
  // Rounding in the path weights: make g exactly compatible.
  double gs = 0;
  for (double v : g) gs += v;
  if (!g.empty())
    for (double& v : g) v -= gs / static_cast<double>(g.size());
  const FluxField W = neumann_interpolant(sd, g);

  FluxField out(dom);
  for (FaceId f = 0; f < static_cast<FaceId>(d.num_faces()); ++f) {
    const Face& fc = d.face(f);
    if (shell.has_face(f)) {
      const FaceId sf = sd->face_id(fc.axis, fc.pos);
      out[f] = kept[f] + (sf == kNone ? 0.0 : W[sf]);
    } else if (is_inner_cell(fc.minus) || is_inner_cell(fc.plus)) {
      out[f] = Y[f];
    }
  }
  // Inner-sphere faces carry Y's flux exactly.
  for (FaceId f : shell.boundary_faces())
    if (is_inner_face(f)) out[f] = Y[f];

  const std::vector<CellId> cells = shell.cell_list();
  res.norm_before = std::pow(cells_energy(Y, cells, p), 1.0 / p);
  res.norm_after = std::pow(cells_energy(out, cells, p), 1.0 / p);
  res.sphere_norm = sphere_lp_norm(Y, Vec3::Zero(), 1.0, p);
  res.constant = res.sphere_norm > 0
                     ? (res.norm_after - res.norm_before) / (std::pow(eps, -1.0 / p) * res.sphere_norm)
                     : 0.0;
  res.field = std::move(out);
  return res;
}

}  // namespace intflux

#endif  // INTFLUX_INTERPOLANT_HPP
