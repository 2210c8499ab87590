#ifndef INTFLUX_TEST_SUPPORT_HPP
#define INTFLUX_TEST_SUPPORT_HPP

// Small field builders shared by the unit tests.

#include <cmath>
#include <vector>

#include "intflux.hpp"
#include "intflux/oracles.hpp"

namespace intflux::test {

inline CellId cell(const LatticeDomain& d, int i, int j, int k) {
  const CellId c = d.cell_id({i, j, k});
  if (c == kNone) throw Error(Errc::invalid_argument, "test cell outside the domain");
  return c;
}

// Straight run of cells along one axis from `from`, `len` cells long.
inline std::vector<CellId> straight_run(const LatticeDomain& d, CellIndex from, int axis, int len) {
  std::vector<CellId> out;
  for (int s = 0; s < len; ++s) {
    CellIndex x = from;
    x[axis] += s;
    out.push_back(cell(d, x.i, x.j, x.k));
  }
  return out;
}

// Unit flux from the first to the last cell of `cells`.
inline FluxField route_field(const DomainPtr& d, const std::vector<CellId>& cells, double w = 1.0) {
  FluxField X(d);
  oracle::detail::push_route(X, cells, w);
  return X;
}

// Counter-clockwise loop around the 2x2 block of cells at (i..i+1, j..j+1, k).
inline FluxField square_loop(const DomainPtr& d, int i, int j, int k, double w = 1.0) {
  const LatticeDomain& D = *d;
  const std::vector<CellId> loop{cell(D, i, j, k), cell(D, i + 1, j, k), cell(D, i + 1, j + 1, k),
                                 cell(D, i, j + 1, k), cell(D, i, j, k)};
  return route_field(d, loop, w);
}

// Charge cell nearest to the origin; used to place a sampled monopole at a cell center.
inline Vec3 central_cell_center(const LatticeDomain& d) {
  const double h = d.cell_size();
  return d.center(d.cell_at_point(Vec3(0.5 * h, 0.5 * h, 0.5 * h)));
}

inline double max_abs_diff(const FluxField& a, const FluxField& b) {
  double m = 0;
  for (std::size_t f = 0; f < a.values().size(); ++f) m = std::max(m, std::abs(a.values()[f] - b.values()[f]));
  return m;
}

inline FluxField random_flux(const DomainPtr& d, oracle::Rng& rng, double scale = 1.0) {
  FluxField X(d);
  for (double& v : X.values()) v = oracle::uniform(rng, -scale, scale);
  return X;
}

}  // namespace intflux::test

#endif  // INTFLUX_TEST_SUPPORT_HPP
