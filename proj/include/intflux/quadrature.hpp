#ifndef INTFLUX_QUADRATURE_HPP
#define INTFLUX_QUADRATURE_HPP

// Ball and sphere integrals on the lattice. Spheres use a hat-weighted shell
// of cells: a cell at distance t = (|c - x0| - r) / h contributes
// h^2 (1 - |t|) for |t| < 1. The plain h-thick shell is off by up to 10% at
// N = 32 from lattice counting noise; the hat kernel stays within 1%.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "intflux/lattice.hpp"

namespace intflux {

// Energy over cells with |c - x0| < r.
inline double ball_energy(const FluxField& X, const Vec3& x0, double r, double p) {
  const LatticeDomain& d = X.domain();
  const std::vector<double> e = cell_energies(X, p);
  double s = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c)
    if ((d.center(c) - x0).norm() < r) s += e[c];
  return s;
}

inline double cells_energy(const FluxField& X, const std::vector<CellId>& cells, double p) {
  const std::vector<double> e = cell_energies(X, p);
  double s = 0;
  for (CellId c : cells) s += e[c];
  return s;
}

inline std::vector<CellId> sphere_cells(const LatticeDomain& d, const Vec3& x0, double r) {
  std::vector<CellId> out;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c)
    if (std::abs((d.center(c) - x0).norm() - r) < d.cell_size()) out.push_back(c);
  return out;
}

// ∫_{∂B_r(x0)} fn(X(c), c - x0) with X(c) the cell vector.
inline double sphere_integral(const FluxField& X, const Vec3& x0, double r,
                              const std::function<double(const Vec3&, const Vec3&)>& fn) {
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size();
  double s = 0;
  for (CellId c : sphere_cells(d, x0, r)) {
    const Vec3 y = d.center(c) - x0;
    s += (1 - std::abs(y.norm() - r) / h) * fn(cell_vector(X, c), y);
  }
  return s * h * h;
}

// Lowest-order Raviart-Thomas reconstruction at a point: each component is
// interpolated linearly between the two faces normal to it. Zero outside the
// domain cells.
inline Vec3 rt0_value(const FluxField& X, const Vec3& x) {
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size();
  const int c = d.cell_at_point(x);
  if (c == kNone) return Vec3::Zero();
  const Vec3 lo = d.center(c) - Vec3::Constant(0.5 * h);
  Vec3 v;
  for (int a = 0; a < 3; ++a) {
    const double t = std::clamp((x[a] - lo[a]) / h, 0.0, 1.0);
    v[a] = ((1 - t) * X[d.cell_face(c, a, 0)] + t * X[d.cell_face(c, a, 1)]) / (h * h);
  }
  return v;
}

inline double sphere_lp_norm(const FluxField& X, const Vec3& x0, double r, double p) {
  const double I = sphere_integral(X, x0, r, [p](const Vec3& v, const Vec3&) { return std::pow(v.norm(), p); });
  return std::pow(I, 1.0 / p);
}

}  // namespace intflux

#endif  // INTFLUX_QUADRATURE_HPP
