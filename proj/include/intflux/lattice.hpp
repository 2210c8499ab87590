#ifndef INTFLUX_LATTICE_HPP
#define INTFLUX_LATTICE_HPP

// Cubic lattice truncated to a ball (or a spherical shell), face-flux fields,
// divergence, boundary trace and the discrete L^p energy.
//
// Conventions used throughout the library:
//  * the cube [-L, L]^3 is split into N^3 cells of size h = 2L/N; for a ball
//    domain L = R;
//  * face (a, i, j, k) lies at lattice coordinate index i (resp. j, k) along
//    axis a and separates cell pos - e_a ("minus" side) from cell pos ("plus");
//  * flux values are area-integrated and measured in the +e_a direction;
//  * a cell is in the domain iff its center c satisfies r_in < |c| < R
//    (r_in = 0 means the full ball, whose center cell then counts as well).

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "intflux/error.hpp"

namespace intflux {

using Vec3 = Eigen::Vector3d;
using CellId = std::int32_t;
using FaceId = std::int32_t;
inline constexpr std::int32_t kNone = -1;

struct CellIndex {
  int i = 0, j = 0, k = 0;
  int operator[](int a) const { return a == 0 ? i : (a == 1 ? j : k); }
  int& operator[](int a) { return a == 0 ? i : (a == 1 ? j : k); }
  auto operator<=>(const CellIndex&) const = default;
};

enum class FaceKind : std::uint8_t { interior, boundary };
enum class BoundarySide : std::uint8_t { none, outer, inner };

struct Face {
  int axis = 0;
  CellIndex pos;          // lattice coordinates of the face (plus-side cell)
  CellId minus = kNone;   // cell at pos - e_axis, kNone if outside the domain
  CellId plus = kNone;    // cell at pos, kNone if outside the domain
  FaceKind kind = FaceKind::interior;
  BoundarySide side = BoundarySide::none;

  // +1 when the domain cell sits on the minus side (outward = +e_axis).
  int outward_sign() const { return minus != kNone ? 1 : -1; }
  CellId inside_cell() const { return minus != kNone ? minus : plus; }
};

struct DomainSpec {
  int N = 16;
  double half_width = 1.0;
  double outer_radius = 1.0;
  double inner_radius = 0.0;
};

class LatticeDomain {
 public:
  static std::shared_ptr<const LatticeDomain> build(const DomainSpec& spec) {
    if (spec.N < 4) throw Error(Errc::resolution_too_small, "N must be at least 4");
    if (!(spec.half_width > 0) || !(spec.outer_radius > 0) || spec.inner_radius < 0 ||
        spec.inner_radius >= spec.outer_radius)
      throw Error(Errc::invalid_argument, "radii must satisfy 0 <= r_in < R, L > 0");
    auto d = std::shared_ptr<LatticeDomain>(new LatticeDomain(spec));
    return d;
  }

  int resolution() const { return spec_.N; }
  double radius() const { return spec_.outer_radius; }
  double inner_radius() const { return spec_.inner_radius; }
  double half_width() const { return spec_.half_width; }
  double cell_size() const { return h_; }
  bool is_shell() const { return spec_.inner_radius > 0; }
  const DomainSpec& spec() const { return spec_; }

  std::size_t num_cells() const { return cells_.size(); }
  std::size_t num_faces() const { return faces_.size(); }
  const std::vector<CellIndex>& cells() const { return cells_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(FaceId f) const { return faces_[f]; }
  const std::vector<FaceId>& interior_faces() const { return interior_faces_; }
  const std::vector<FaceId>& boundary_faces() const { return boundary_faces_; }

  double coord(int idx) const { return -spec_.half_width + (idx + 0.5) * h_; }
  double face_coord(int idx) const { return -spec_.half_width + idx * h_; }
  Vec3 center(CellId c) const {
    const CellIndex& x = cells_[c];
    return {coord(x.i), coord(x.j), coord(x.k)};
  }
  Vec3 face_center(FaceId f) const {
    const Face& fc = faces_[f];
    Vec3 x{coord(fc.pos.i), coord(fc.pos.j), coord(fc.pos.k)};
    x[fc.axis] = face_coord(fc.pos[fc.axis]);
    return x;
  }

  bool in_cube(const CellIndex& x) const {
    return x.i >= 0 && x.j >= 0 && x.k >= 0 && x.i < spec_.N && x.j < spec_.N && x.k < spec_.N;
  }
  CellId cell_id(const CellIndex& x) const {
    if (!in_cube(x)) return kNone;
    return cell_lookup_[linear(x)];
  }
  // Face id for lattice face (axis, pos); kNone for exterior faces.
  FaceId face_id(int axis, const CellIndex& pos) const {
    const int N = spec_.N;
    for (int a = 0; a < 3; ++a) {
      const int hi = (a == axis) ? N : N - 1;
      if (pos[a] < 0 || pos[a] > hi) return kNone;
    }
    return face_lookup_[face_linear(axis, pos)];
  }
  // side 0 = lower face along axis, side 1 = upper face.
  FaceId cell_face(CellId c, int axis, int side) const { return cell_faces_[6 * c + 2 * axis + side]; }
  // Neighbor cell across the given face, or kNone.
  CellId neighbor(CellId c, int axis, int side) const {
    const Face& f = faces_[cell_face(c, axis, side)];
    return side == 0 ? f.minus : f.plus;
  }

  int cell_at_point(const Vec3& x) const {
    CellIndex idx;
    for (int a = 0; a < 3; ++a) idx[a] = static_cast<int>(std::floor((x[a] + spec_.half_width) / h_));
    return cell_id(idx);
  }

 private:
  explicit LatticeDomain(const DomainSpec& spec) : spec_(spec), h_(2.0 * spec.half_width / spec.N) {
    const int N = spec.N;
    cell_lookup_.assign(static_cast<std::size_t>(N) * N * N, kNone);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) {
          const double r = std::sqrt(coord(i) * coord(i) + coord(j) * coord(j) + coord(k) * coord(k));
          if (r < spec.outer_radius && (spec.inner_radius == 0 || r > spec.inner_radius)) {
            cell_lookup_[linear({i, j, k})] = static_cast<CellId>(cells_.size());
            cells_.push_back({i, j, k});
          }
        }
    if (cells_.empty()) throw Error(Errc::resolution_too_small, "no interior cell at this resolution");

    face_lookup_.assign(3 * static_cast<std::size_t>(N + 1) * (N + 1) * (N + 1), kNone);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < N + (a == 0); ++i)
        for (int j = 0; j < N + (a == 1); ++j)
          for (int k = 0; k < N + (a == 2); ++k) {
            CellIndex pos{i, j, k};
            CellIndex lo = pos;
            lo[a] -= 1;
            const CellId m = cell_id(lo), p = cell_id(pos);
            if (m == kNone && p == kNone) continue;
            Face f;
            f.axis = a;
            f.pos = pos;
            f.minus = m;
            f.plus = p;
            if (m != kNone && p != kNone) {
              f.kind = FaceKind::interior;
            } else {
              f.kind = FaceKind::boundary;
              const CellIndex outside = (m == kNone) ? lo : pos;
              f.side = BoundarySide::outer;
              if (spec.inner_radius > 0 && in_cube(outside)) {
                const double r = std::sqrt(coord(outside.i) * coord(outside.i) +
                                           coord(outside.j) * coord(outside.j) +
                                           coord(outside.k) * coord(outside.k));
                if (r <= spec.inner_radius) f.side = BoundarySide::inner;
              }
            }
            const FaceId id = static_cast<FaceId>(faces_.size());
            face_lookup_[face_linear(a, pos)] = id;
            (f.kind == FaceKind::interior ? interior_faces_ : boundary_faces_).push_back(id);
            faces_.push_back(f);
          }

    cell_faces_.assign(6 * cells_.size(), kNone);
    for (CellId c = 0; c < static_cast<CellId>(cells_.size()); ++c)
      for (int a = 0; a < 3; ++a) {
        CellIndex up = cells_[c];
        up[a] += 1;
        cell_faces_[6 * c + 2 * a] = face_id(a, cells_[c]);
        cell_faces_[6 * c + 2 * a + 1] = face_id(a, up);
      }
  }

  std::size_t linear(const CellIndex& x) const {
    return (static_cast<std::size_t>(x.i) * spec_.N + x.j) * spec_.N + x.k;
  }
  std::size_t face_linear(int axis, const CellIndex& p) const {
    const std::size_t N = spec_.N;
    return static_cast<std::size_t>(axis) * (N + 1) * (N + 1) * (N + 1) +
           (static_cast<std::size_t>(p.i) * (N + 1) + p.j) * (N + 1) + p.k;
  }

  DomainSpec spec_;
  double h_;
  std::vector<CellIndex> cells_;
  std::vector<CellId> cell_lookup_;
  std::vector<Face> faces_;
  std::vector<FaceId> face_lookup_;
  std::vector<FaceId> interior_faces_, boundary_faces_;
  std::vector<FaceId> cell_faces_;
};

using DomainPtr = std::shared_ptr<const LatticeDomain>;

inline DomainPtr build_domain(int N, double R = 1.0) {
  if (!(R > 0)) throw Error(Errc::invalid_argument, "R must be positive");
  return LatticeDomain::build({N, R, R, 0.0});
}

// Shell r_in < |x| < r_out inside the cube [-L, L]^3.
inline DomainPtr build_shell(int N, double half_width, double r_in, double r_out) {
  return LatticeDomain::build({N, half_width, r_out, r_in});
}

// Sum of outward oriented areas of the boundary faces.
inline Vec3 boundary_area_sum(const LatticeDomain& d) {
  Vec3 s = Vec3::Zero();
  const double a = d.cell_size() * d.cell_size();
  for (FaceId f : d.boundary_faces()) s[d.face(f).axis] += d.face(f).outward_sign() * a;
  return s;
}

// Face-connectivity of the cell set (stronger than edge-connectivity).
inline bool cells_connected(const LatticeDomain& d) {
  std::vector<char> seen(d.num_cells(), 0);
  std::queue<CellId> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const CellId c = q.front();
    q.pop();
    for (int a = 0; a < 3; ++a)
      for (int s = 0; s < 2; ++s) {
        const CellId n = d.neighbor(c, a, s);
        if (n != kNone && !seen[n]) {
          seen[n] = 1;
          ++count;
          q.push(n);
        }
      }
  }
  return count == d.num_cells();
}

class FluxField {
 public:
  FluxField() = default;
  explicit FluxField(DomainPtr d) : domain_(std::move(d)), flux_(domain_->num_faces(), 0.0) {}
  FluxField(DomainPtr d, std::vector<double> flux) : domain_(std::move(d)), flux_(std::move(flux)) {
    if (flux_.size() != domain_->num_faces())
      throw Error(Errc::invalid_argument, "flux vector size does not match the domain");
  }

  const LatticeDomain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  std::span<const double> flux() const { return flux_; }
  std::vector<double>& values() { return flux_; }
  const std::vector<double>& values() const { return flux_; }
  double operator[](FaceId f) const { return flux_[f]; }
  double& operator[](FaceId f) { return flux_[f]; }

  FluxField& operator+=(const FluxField& o) {
    for (std::size_t f = 0; f < flux_.size(); ++f) flux_[f] += o.flux_[f];
    return *this;
  }
  FluxField& operator*=(double s) {
    for (double& v : flux_) v *= s;
    return *this;
  }

  double mass() const {
    double m = 0;
    for (double v : flux_) m += std::abs(v);
    return m;
  }

 private:
  DomainPtr domain_;
  std::vector<double> flux_;
};

inline std::vector<double> divergence(const FluxField& X) {
  const LatticeDomain& d = X.domain();
  std::vector<double> div(d.num_cells(), 0.0);
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) {
    double s = 0;
    for (int a = 0; a < 3; ++a) s += X[d.cell_face(c, a, 1)] - X[d.cell_face(c, a, 0)];
    div[c] = s;
  }
  return div;
}

// Integer charges per cell. Zero entries are never stored.
class ChargeSet {
 public:
  ChargeSet() = default;
  explicit ChargeSet(std::map<CellId, int> q) {
    for (auto [c, v] : q)
      if (v != 0) q_[c] = v;
  }
  void set(CellId c, int q) {
    if (q == 0)
      q_.erase(c);
    else
      q_[c] = q;
  }
  void add(CellId c, int q) { set(c, at(c) + q); }
  int at(CellId c) const {
    auto it = q_.find(c);
    return it == q_.end() ? 0 : it->second;
  }
  int total() const {
    int s = 0;
    for (auto [c, v] : q_) s += v;
    return s;
  }
  int count() const {
    int s = 0;
    for (auto [c, v] : q_) s += std::abs(v);
    return s;
  }
  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }
  const std::map<CellId, int>& map() const { return q_; }
  auto begin() const { return q_.begin(); }
  auto end() const { return q_.end(); }
  bool operator==(const ChargeSet&) const = default;

 private:
  std::map<CellId, int> q_;
};

inline ChargeSet check_integer_fluxes(const FluxField& X, double tol = 1e-6) {
  if (!(tol < 0.5)) throw Error(Errc::invalid_argument, "tolerance must be below 1/2");
  const auto div = divergence(X);
  ChargeSet C;
  for (CellId c = 0; c < static_cast<CellId>(div.size()); ++c) {
    const double q = std::round(div[c]);
    const double dev = std::abs(div[c] - q);
    if (dev > tol) {
      std::ostringstream os;
      os << "cell " << c << " divergence " << div[c] << " deviates by " << dev;
      throw NonIntegralDivergence(c, dev, os.str());
    }
    if (q != 0) C.set(c, static_cast<int>(q));
  }
  return C;
}

struct BoundaryData {
  std::vector<double> flux;  // outward flux, indexed like domain.boundary_faces()
  int degree = 0;

  double mass() const {
    double m = 0;
    for (double v : flux) m += std::abs(v);
    return m;
  }
  double total() const {
    double s = 0;
    for (double v : flux) s += v;
    return s;
  }
};

inline BoundaryData make_boundary_data(std::vector<double> outward, double tol = 1e-6) {
  BoundaryData B;
  B.flux = std::move(outward);
  const double s = B.total();
  const double k = std::round(s);
  if (std::abs(s - k) > tol) {
    std::ostringstream os;
    os << "boundary flux sums to " << s;
    throw Error(Errc::non_integral_degree, os.str());
  }
  B.degree = static_cast<int>(k);
  return B;
}

inline BoundaryData boundary_trace(const FluxField& X, double tol = 1e-6) {
  const LatticeDomain& d = X.domain();
  std::vector<double> out;
  out.reserve(d.boundary_faces().size());
  for (FaceId f : d.boundary_faces()) out.push_back(d.face(f).outward_sign() * X[f]);
  return make_boundary_data(std::move(out), tol);
}

// Writes boundary data into the boundary faces of X (axis orientation).
inline void impose_boundary(FluxField& X, const BoundaryData& B) {
  const LatticeDomain& d = X.domain();
  if (B.flux.size() != d.boundary_faces().size())
    throw Error(Errc::invalid_argument, "boundary data size does not match the domain");
  for (std::size_t b = 0; b < B.flux.size(); ++b) {
    const FaceId f = d.boundary_faces()[b];
    X[f] = d.face(f).outward_sign() * B.flux[b];
  }
}

inline void check_exponent(double p) {
  if (!(p > 1.0 && p < 1.5)) {
    std::ostringstream os;
    os << "p = " << p << " is outside the valid range ]1, 3/2[";
    throw Error(Errc::exponent_out_of_range, os.str());
  }
}

// Energy quadrature. `corner` averages |X|^p over the eight combinations of
// one face per axis; `face_average` uses the norm of the axis-wise face average.
enum class Quadrature { corner, face_average };

namespace detail {
inline double corner_energy(const double (&F)[3][2], double inv_area, double p) {
  double s = 0;
  for (int sx = 0; sx < 2; ++sx)
    for (int sy = 0; sy < 2; ++sy)
      for (int sz = 0; sz < 2; ++sz) {
        const double x = F[0][sx] * inv_area, y = F[1][sy] * inv_area, z = F[2][sz] * inv_area;
        const double t = x * x + y * y + z * z;
        if (t > 0) s += std::pow(t, 0.5 * p);
      }
  return 0.125 * s;
}
}  // namespace detail

inline Vec3 cell_vector(const FluxField& X, CellId c) {
  const LatticeDomain& d = X.domain();
  const double inv_area = 1.0 / (d.cell_size() * d.cell_size());
  Vec3 v;
  for (int a = 0; a < 3; ++a) v[a] = 0.5 * (X[d.cell_face(c, a, 0)] + X[d.cell_face(c, a, 1)]) * inv_area;
  return v;
}

// Per-cell energy contributions ∫_cell |X|^p (already multiplied by h^3).
inline std::vector<double> cell_energies(const FluxField& X, double p, Quadrature q = Quadrature::corner) {
  check_exponent(p);
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size(), vol = h * h * h, inv_area = 1.0 / (h * h);
  std::vector<double> e(d.num_cells());
  for (CellId c = 0; c < static_cast<CellId>(d.num_cells()); ++c) {
    if (q == Quadrature::corner) {
      double F[3][2];
      for (int a = 0; a < 3; ++a)
        for (int s = 0; s < 2; ++s) F[a][s] = X[d.cell_face(c, a, s)];
      e[c] = detail::corner_energy(F, inv_area, p) * vol;
    } else {
      const double n = cell_vector(X, c).norm();
      e[c] = n > 0 ? std::pow(n, p) * vol : 0.0;
    }
  }
  return e;
}

inline double energy(const FluxField& X, double p, Quadrature q = Quadrature::corner) {
  const auto e = cell_energies(X, p, q);
  double s = 0;
  for (double v : e) s += v;
  return s;
}

}  // namespace intflux

#endif  // INTFLUX_LATTICE_HPP
