#ifndef INTFLUX_ANALYSIS_HPP
#define INTFLUX_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <vector>

#include "intflux/field_io.hpp"
#include "intflux/lattice.hpp"
#include "intflux/quadrature.hpp"
#include "intflux/sampling.hpp"

namespace intflux {

// Small-energy threshold: (4π)^{1-p} / 2.
inline double epsilon_p(double p) {
  check_exponent(p);
  return 0.5 * std::pow(4.0 * std::numbers::pi, 1.0 - p);
}

// Rescaled energy of the exact unit monopole, r-independent.
inline double monopole_energy(double p) { return std::pow(4.0 * std::numbers::pi, 1.0 - p) / (3.0 - 2.0 * p); }

inline void check_ball_inside(const LatticeDomain& d, const Vec3& x0, double r) {
  if (!(r > 0) || x0.norm() + r > d.radius() * (1 + 1e-12))
    throw Error(Errc::ball_outside_domain, "ball of radius " + format_double(r) + " leaves the domain");
}

inline double rescaled_energy(const FluxField& X, const Vec3& x0, double r, double p) {
  check_exponent(p);
  check_ball_inside(X.domain(), x0, r);
  return std::pow(r, 2 * p - 3) * ball_energy(X, x0, r, p);
}

// ---------------------------------------------------------------------------
// ε-regularity scan.

struct RegularityReport {
  double eps_p = 0;        // threshold used
  std::vector<double> radii;
  std::vector<std::vector<double>> theta;  // [cell][radius], NaN when the ball leaves the domain
  std::vector<CellId> flagged;             // tested cells contained in no small-energy ball
  std::vector<CellId> untested;            // cells not covered (with margin) by any admissible ball
};

inline std::vector<double> default_scan_radii(const LatticeDomain& d) {
  const double h = d.cell_size();
  return {1.5 * h, 2 * h, 3 * h, 4 * h, 6 * h, 8 * h};
}

// Every cell center is tried as a ball center. A ball clears the cells within
// r/2 of its center when its rescaled energy is below the threshold; a ball is
// admissible when all lattice cells of its stencil lie in the domain.
// threshold <= 0 selects epsilon_p(p).
inline RegularityReport regularity_scan(const FluxField& X, double p, std::vector<double> radii = {},
                                        double threshold = 0) {
  check_exponent(p);
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size();
  if (radii.empty()) radii = default_scan_radii(d);
  std::sort(radii.begin(), radii.end());
  RegularityReport rep;
  rep.eps_p = threshold > 0 ? threshold : epsilon_p(p);
  rep.radii = radii;
  const std::vector<double> e = cell_energies(X, p);

  struct Offset {
    int di, dj, dk;
    double dist;
  };
  const int reach = static_cast<int>(std::ceil(radii.back() / h)) + 1;
  std::vector<Offset> offs;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int k = -reach; k <= reach; ++k) {
        const double dist = h * std::sqrt(double(i * i + j * j + k * k));
        if (dist < radii.back()) offs.push_back({i, j, k, dist});
      }
  std::stable_sort(offs.begin(), offs.end(), [](const Offset& a, const Offset& b) { return a.dist < b.dist; });

  const std::size_t n = d.num_cells(), nr = radii.size();
  rep.theta.assign(n, std::vector<double>(nr, std::numeric_limits<double>::quiet_NaN()));
  std::vector<char> cleared(n, 0), covered(n, 0);
  std::vector<double> sum(nr);
  std::vector<char> ok(nr);
  for (CellId c = 0; c < static_cast<CellId>(n); ++c) {
    const CellIndex x = d.cells()[c];
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(ok.begin(), ok.end(), 1);
    for (const Offset& o : offs) {
      const CellId m = d.cell_id({x.i + o.di, x.j + o.dj, x.k + o.dk});
      for (std::size_t r = 0; r < nr; ++r) {
        if (o.dist >= radii[r]) continue;
        if (m == kNone)
          ok[r] = 0;
        else
          sum[r] += e[m];
      }
    }
    for (std::size_t r = 0; r < nr; ++r) {
      if (!ok[r]) continue;
      const double th = std::pow(radii[r], 2 * p - 3) * sum[r];
      rep.theta[c][r] = th;
      const bool small = th < rep.eps_p;
      for (const Offset& o : offs) {
        if (o.dist > 0.5 * radii[r]) break;
        const CellId m = d.cell_id({x.i + o.di, x.j + o.dj, x.k + o.dk});
        if (m == kNone) continue;
        covered[m] = 1;
        if (small) cleared[m] = 1;
      }
    }
  }
  for (CellId c = 0; c < static_cast<CellId>(n); ++c) {
    if (!covered[c])
      rep.untested.push_back(c);
    else if (!cleared[c])
      rep.flagged.push_back(c);
  }
  return rep;
}

// 26-connected clusters of a cell set, each sorted; clusters ordered by first cell.
inline std::vector<std::vector<CellId>> cell_clusters(const LatticeDomain& d, const std::vector<CellId>& cells) {
  std::set<CellId> rest(cells.begin(), cells.end());
  std::vector<std::vector<CellId>> out;
  while (!rest.empty()) {
    std::vector<CellId> cl{*rest.begin()};
    rest.erase(rest.begin());
    for (std::size_t q = 0; q < cl.size(); ++q) {
      const CellIndex x = d.cells()[cl[q]];
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
          for (int k = -1; k <= 1; ++k) {
            const CellId m = d.cell_id({x.i + i, x.j + j, x.k + k});
            if (m != kNone && rest.erase(m)) cl.push_back(m);
          }
    }
    std::sort(cl.begin(), cl.end());
    out.push_back(std::move(cl));
  }
  return out;
}

// Largest Chebyshev extent of a cluster, in cells (a single cell has diameter 1).
inline int cluster_diameter(const LatticeDomain& d, const std::vector<CellId>& cl) {
  int best = 0;
  for (int a = 0; a < 3; ++a) {
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (CellId c : cl) {
      lo = std::min(lo, d.cells()[c][a]);
      hi = std::max(hi, d.cells()[c][a]);
    }
    best = std::max(best, hi - lo + 1);
  }
  return cl.empty() ? 0 : best;
}

// ---------------------------------------------------------------------------
// Monotonicity.

struct MonotonicityProfile {
  std::vector<double> radii;
  std::vector<double> theta;      // r^{2p-3} E(B_r)
  std::vector<double> rhs;        // p r^{2p-3} ∫_{∂B_r} |X|^{p-2} |X^∥|²
  std::vector<double> dtheta;     // finite-difference derivative of theta
  std::vector<double> quad_error; // |theta(corner) - theta(face average)|
};

// Θ(r) uses the cell-center-inside rule of rescaled_energy. The right side of
// the identity d/dr Θ = p r^{2p-3} ∫ |X|^{p-2}|X^∥|² comes from the domain
// variation x -> x + t x φ(|x|) of the flux-transported field.
inline MonotonicityProfile monotonicity_profile(const FluxField& X, const Vec3& x0, double p,
                                                const std::vector<double>& radii) {
  check_exponent(p);
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] > radii[k - 1])) throw Error(Errc::invalid_argument, "radii must be strictly increasing");
  const LatticeDomain& d = X.domain();
  MonotonicityProfile M;
  M.radii = radii;
  const std::vector<double> ec = cell_energies(X, p, Quadrature::corner);
  const std::vector<double> ef = cell_energies(X, p, Quadrature::face_average);
  std::vector<double> dist(d.num_cells());
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) dist[c] = (d.center(c) - x0).norm();
  for (double r : radii) {
    check_ball_inside(d, x0, r);
    double sc = 0, sf = 0;
    for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c)
      if (dist[c] < r) {
        sc += ec[c];
        sf += ef[c];
      }
    const double w = std::pow(r, 2 * p - 3);
    M.theta.push_back(w * sc);
    M.quad_error.push_back(w * std::abs(sc - sf));
    const double tang = sphere_integral(X, x0, r, [p](const Vec3& v, const Vec3& y) {
      const double n = v.norm(), ry = y.norm();
      if (n == 0 || ry == 0) return 0.0;
      const Vec3 u = y / ry;
      const Vec3 par = v - v.dot(u) * u;
      return std::pow(n, p - 2) * par.squaredNorm();
    });
    M.rhs.push_back(p * w * tang);
  }
  const std::size_t n = radii.size();
  M.dtheta.assign(n, 0.0);
  for (std::size_t k = 0; k < n && n > 1; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1, b = k + 1 == n ? n - 1 : k + 1;
    M.dtheta[k] = (M.theta[b] - M.theta[a]) / (radii[b] - radii[a]);
  }
  return M;
}

// ---------------------------------------------------------------------------
// Stationarity under domain variations.

using VectorFn = std::function<Vec3(const Vec3&)>;

// p ∫ |X|^{p-2} Σ ω(e_i,e_j) ω(∇_{e_i}V, e_j) - ∫ |X|^p div V for the 2-form ω
// dual to X, i.e. (p-1) ∫ |X|^p div V - p ∫ |X|^{p-2} <X, (∇V) X>.
// V is sampled at cell centers, ∇V by central differences with step h/2.
inline double stationarity_residual(const FluxField& X, double p, const VectorFn& V) {
  check_exponent(p);
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size(), vol = h * h * h, step = 0.5 * h;
  double vmax = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) vmax = std::max(vmax, V(d.center(c)).norm());
  if (vmax == 0) return 0.0;
  for (FaceId f : d.boundary_faces()) {
    const CellId c = d.face(f).inside_cell();
    if (V(d.center(c)).norm() > 1e-12 * vmax || V(d.face_center(f)).norm() > 1e-12 * vmax)
      throw Error(Errc::support_violation, "test field must vanish on boundary cells");
  }
  double s = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) {
    const Vec3 x = d.center(c), v = cell_vector(X, c);
    const double n = v.norm();
    if (n == 0) continue;
    Eigen::Matrix3d J;  // J(m, i) = ∂_i V_m
    for (int i = 0; i < 3; ++i) {
      Vec3 e = Vec3::Zero();
      e[i] = step;
      J.col(i) = (V(x + e) - V(x - e)) / (2 * step);
    }
    const double np = std::pow(n, p);
    s += ((p - 1) * np * J.trace() - p * std::pow(n, p - 2) * v.dot(J * v)) * vol;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Blow-ups.

struct BlowupOptions {
  int resolution = 0;  // output N; 0 picks the aligned resolution when one exists, else input N
};

namespace detail {
// Output resolution for which x0 + λ·(output lattice) lands on the input lattice.
inline int aligned_resolution(const LatticeDomain& d, const Vec3& x0, double lambda) {
  const double n = 2.0 * lambda / d.cell_size();
  const long N = std::lround(n);
  if (N < 4 || std::abs(n - N) > 1e-9) return 0;
  for (int a = 0; a < 3; ++a) {
    const double t = (x0[a] - lambda + d.half_width()) / d.cell_size();
    if (std::abs(t - std::round(t)) > 1e-9) return 0;
  }
  return static_cast<int>(N);
}
}  // namespace detail

// Flux-preserving blow-up X_λ(y) = λ² X(x0 + λ y) on the unit ball lattice:
// each output face carries the flux of X through its image under y -> x0 + λy.
// Exact face transfer on aligned lattices, RT0 reconstruction otherwise.
inline FluxField blowup(const FluxField& X, const Vec3& x0, double lambda, const BlowupOptions& opt = {}) {
  const LatticeDomain& d = X.domain();
  if (!(lambda > 0) || x0.norm() + lambda > d.radius() * (1 + 1e-12))
    throw Error(Errc::scale_out_of_domain, "blow-up ball of radius " + format_double(lambda) + " leaves the domain");
  const int aligned = detail::aligned_resolution(d, x0, lambda);
  const int N = opt.resolution > 0 ? opt.resolution : (aligned > 0 ? aligned : d.resolution());
  const DomainPtr out_dom = build_domain(N, 1.0);
  const LatticeDomain& od = *out_dom;
  FluxField out(out_dom);
  const double ho = od.cell_size();
  if (N == aligned) {
    for (FaceId f = 0; f < static_cast<FaceId>(od.num_faces()); ++f) {
      const Face& fc = od.face(f);
      CellIndex pos;
      for (int a = 0; a < 3; ++a) {
        const double y = -1.0 + fc.pos[a] * ho;
        pos[a] = static_cast<int>(std::lround((x0[a] + lambda * y + d.half_width()) / d.cell_size()));
      }
      const FaceId g = d.face_id(fc.axis, pos);
      out[f] = g == kNone ? 0.0 : X[g];
    }
    return out;
  }
  const double area = (lambda * ho) * (lambda * ho);
  for (FaceId f = 0; f < static_cast<FaceId>(od.num_faces()); ++f) {
    const Face& fc = od.face(f);
    const int a = fc.axis, b = (a + 1) % 3, c = (a + 2) % 3;
    const Vec3 y0 = od.face_center(f);
    double s = 0;
    for (int u = 0; u < 3; ++u)
      for (int v = 0; v < 3; ++v) {
        Vec3 y = y0;
        y[b] += 0.5 * ho * detail::kGaussNodes[u];
        y[c] += 0.5 * ho * detail::kGaussNodes[v];
        s += 0.25 * detail::kGaussWeights[u] * detail::kGaussWeights[v] * rt0_value(X, x0 + lambda * y)[a];
      }
    out[f] = s * area;
  }
  return out;
}

// ∫_{B_radius(x0)} |x-x0|^{2p-3} |X|^{p-2} |X^∥|², cells at the center excluded.
inline double radiality_defect(const FluxField& X, const Vec3& x0, double p, double radius = 1.0) {
  check_exponent(p);
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size(), vol = h * h * h;
  double s = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) {
    const Vec3 y = d.center(c) - x0;
    const double r = y.norm();
    if (r >= radius || r < 0.5 * h) continue;
    const Vec3 v = cell_vector(X, c);
    const double n = v.norm();
    if (n == 0) continue;
    const Vec3 u = y / r;
    s += std::pow(r, 2 * p - 3) * std::pow(n, p - 2) * (v - v.dot(u) * u).squaredNorm() * vol;
  }
  return s;
}

// Same weight with the full |X|²: the scale against which radiality_defect is small.
inline double radiality_reference(const FluxField& X, const Vec3& x0, double p, double radius = 1.0) {
  check_exponent(p);
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size(), vol = h * h * h;
  double s = 0;
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) {
    const Vec3 y = d.center(c) - x0;
    const double r = y.norm();
    if (r >= radius || r < 0.5 * h) continue;
    s += std::pow(r, 2 * p - 3) * std::pow(cell_vector(X, c).norm(), p);
  }
  return s * vol;
}

struct HomogeneityOptions {
  Vec3 center = Vec3::Zero();
  double r_min = 0.25;  // ray samples on [r_min, r_max]
  double r_max = 0.9;
  int directions = 64;
  int samples = 24;
};

// Max over rays of (max - min) / mean of |c - x0|² |X(c)| over the cells c a
// ray passes through (cell-center values; the cell holding the center is
// skipped). Zero for exactly (-2)-homogeneous magnitudes.
inline double homogeneity_defect(const FluxField& X, const HomogeneityOptions& opt = {}) {
  const LatticeDomain& d = X.domain();
  const int center_cell = d.cell_at_point(opt.center);
  double worst = 0;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < opt.directions; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / opt.directions;
    const double rho = std::sqrt(1.0 - z * z);
    const Vec3 u(rho * std::cos(golden * k), rho * std::sin(golden * k), z);
    double lo = std::numeric_limits<double>::infinity(), hi = 0, mean = 0;
    int n = 0, last = kNone;
    for (int s = 0; s < opt.samples; ++s) {
      const double t = opt.r_min + (opt.r_max - opt.r_min) * s / std::max(1, opt.samples - 1);
      const int c = d.cell_at_point(opt.center + t * u);
      if (c == kNone || c == center_cell || c == last) continue;
      last = c;
      const double v = (d.center(c) - opt.center).squaredNorm() * cell_vector(X, c).norm();
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      mean += v;
      ++n;
    }
    if (n >= 2 && mean > 0) worst = std::max(worst, (hi - lo) / (mean / n));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Box counting.

struct BoxCountRow {
  double delta = 0;
  int count = 0;
  double premeasure = 0;  // count · δ^s
};

// Boxes of side m·h (m from `multiples`) on the grid anchored at the cube corner.
inline std::vector<BoxCountRow> box_count(const LatticeDomain& d, const std::vector<CellId>& flagged, double s,
                                          const std::vector<int>& multiples = {1, 2, 4, 8, 16}) {
  if (!(s > 0 && s < 3)) throw Error(Errc::invalid_argument, "box-counting exponent must lie in (0, 3)");
  std::vector<BoxCountRow> out;
  for (int m : multiples) {
    if (m <= 0) throw Error(Errc::invalid_argument, "box multiples must be positive");
    std::set<std::array<int, 3>> boxes;
    for (CellId c : flagged) {
      const CellIndex& x = d.cells()[c];
      boxes.insert({x.i / m, x.j / m, x.k / m});
    }
    const double delta = m * d.cell_size();
    out.push_back({delta, static_cast<int>(boxes.size()), boxes.size() * std::pow(delta, s)});
  }
  return out;
}

}  // namespace intflux

#endif  // INTFLUX_ANALYSIS_HPP
