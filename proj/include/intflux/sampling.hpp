#ifndef INTFLUX_SAMPLING_HPP
#define INTFLUX_SAMPLING_HPP

// Exact or high-order face-flux sampling of analytic fields.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>

#include "intflux/lattice.hpp"

namespace intflux {

namespace detail {

// Flux of x/(4π|x|^3) through the rectangle [x1,x2]×[y1,y2] at signed height z.
inline double rectangle_solid_angle_flux(double x1, double x2, double y1, double y2, double z) {
  if (z == 0) return 0.0;
  auto F = [z](double x, double y) { return std::atan(x * y / (z * std::sqrt(x * x + y * y + z * z))); };
  return (F(x2, y2) - F(x1, y2) - F(x2, y1) + F(x1, y1)) / (4.0 * std::numbers::pi);
}

inline constexpr std::array<double, 3> kGaussNodes = {-0.7745966692414834, 0.0, 0.7745966692414834};
inline constexpr std::array<double, 3> kGaussWeights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

}  // namespace detail

// Exact face fluxes of q·(x - x0)/(4π|x - x0|^3).
inline FluxField sample_monopole(const DomainPtr& d, const Vec3& x0, double q = 1.0) {
  FluxField X(d);
  const double h = d->cell_size();
  for (FaceId f = 0; f < static_cast<FaceId>(d->num_faces()); ++f) {
    const Face& fc = d->face(f);
    const int a = fc.axis, b = (a + 1) % 3, c = (a + 2) % 3;
    const Vec3 m = d->face_center(f) - x0;
    X[f] = q * detail::rectangle_solid_angle_flux(m[b] - h / 2, m[b] + h / 2, m[c] - h / 2, m[c] + h / 2, m[a]);
  }
  return X;
}

// Constant field v: flux = v_a·h^2.
inline FluxField sample_uniform(const DomainPtr& d, const Vec3& v) {
  FluxField X(d);
  const double area = d->cell_size() * d->cell_size();
  for (FaceId f = 0; f < static_cast<FaceId>(d->num_faces()); ++f) X[f] = v[d->face(f).axis] * area;
  return X;
}

// Face fluxes of a smooth field by 3x3 Gauss quadrature on each face.
inline FluxField sample_field(const DomainPtr& d, const std::function<Vec3(const Vec3&)>& field) {
  FluxField X(d);
  const double h = d->cell_size();
  for (FaceId f = 0; f < static_cast<FaceId>(d->num_faces()); ++f) {
    const int a = d->face(f).axis, b = (a + 1) % 3, c = (a + 2) % 3;
    const Vec3 m = d->face_center(f);
    double s = 0;
    for (int u = 0; u < 3; ++u)
      for (int v = 0; v < 3; ++v) {
        Vec3 x = m;
        x[b] += 0.5 * h * detail::kGaussNodes[u];
        x[c] += 0.5 * h * detail::kGaussNodes[v];
        s += detail::kGaussWeights[u] * detail::kGaussWeights[v] * field(x)[a];
      }
    X[f] = s * h * h / 4.0;
  }
  return X;
}

// Fluxes of curl(A) via Stokes: circulation of A around each face. Every
// lattice edge integral is evaluated by the same routine on both sides, so the
// resulting field is divergence-free up to rounding.
inline FluxField sample_curl(const DomainPtr& d, const std::function<Vec3(const Vec3&)>& A) {
  FluxField X(d);
  const double h = d->cell_size();
  // ∫ A_e along the edge starting at x in direction e, length h.
  auto edge = [&](Vec3 x, int e) {
    double s = 0;
    for (int u = 0; u < 3; ++u) {
      Vec3 y = x;
      y[e] += 0.5 * h * (1.0 + detail::kGaussNodes[u]);
      s += detail::kGaussWeights[u] * A(y)[e];
    }
    return 0.5 * h * s;
  };
  for (FaceId f = 0; f < static_cast<FaceId>(d->num_faces()); ++f) {
    const int a = d->face(f).axis, b = (a + 1) % 3, c = (a + 2) % 3;
    Vec3 o = d->face_center(f);
    o[b] -= h / 2;
    o[c] -= h / 2;
    Vec3 ob = o, oc = o;
    ob[b] += h;
    oc[c] += h;
    // Counterclockwise in the (b, c) plane, normal +e_a.
    X[f] = edge(o, b) + edge(ob, c) - edge(oc, b) - edge(o, c);
  }
  return X;
}

// Degree-k boundary data: k times the exact monopole flux from the origin
// through every boundary face (all outward fluxes positive, total exactly k up
// to rounding).
inline BoundaryData uniform_degree_boundary(const DomainPtr& d, int k) {
  const FluxField M = sample_monopole(d, Vec3::Zero(), 1.0);
  std::vector<double> out;
  out.reserve(d->boundary_faces().size());
  for (FaceId f : d->boundary_faces()) out.push_back(k * d->face(f).outward_sign() * M[f]);
  return make_boundary_data(std::move(out));
}

}  // namespace intflux

#endif  // INTFLUX_SAMPLING_HPP
