#ifndef INTFLUX_PROJECTOR_HPP
#define INTFLUX_PROJECTOR_HPP

// Divergence-constraint machinery shared by the convex solver and the
// Neumann interpolant: weighted cell Laplacians over the interior faces and an
// exact spanning-tree correction that restores a prescribed divergence.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <queue>
#include <vector>

#include "intflux/lattice.hpp"

namespace intflux {

class FluxProjector {
 public:
  explicit FluxProjector(DomainPtr d) : d_(std::move(d)) {
    if (!cells_connected(*d_)) throw Error(Errc::invalid_argument, "domain cells are not connected");
    const int n = static_cast<int>(d_->num_cells());
    // Unknowns are cells 1..n-1; cell 0 is pinned.
    std::vector<Eigen::Triplet<double>> trip;
    for (CellId c = 1; c < n; ++c) trip.emplace_back(c - 1, c - 1, 1.0);
    for (FaceId f : d_->interior_faces()) {
      const Face& fc = d_->face(f);
      if (fc.minus > 0 && fc.plus > 0) {
        trip.emplace_back(fc.minus - 1, fc.plus - 1, 1.0);
        trip.emplace_back(fc.plus - 1, fc.minus - 1, 1.0);
      }
    }
    L_.resize(n - 1, n - 1);
    L_.setFromTriplets(trip.begin(), trip.end());
    L_.makeCompressed();
    // Value slots touched by each interior face.
    slots_.resize(d_->interior_faces().size());
    for (std::size_t k = 0; k < d_->interior_faces().size(); ++k) {
      const Face& fc = d_->face(d_->interior_faces()[k]);
      Slots& s = slots_[k];
      s.mm = fc.minus > 0 ? find(fc.minus - 1, fc.minus - 1) : -1;
      s.pp = fc.plus > 0 ? find(fc.plus - 1, fc.plus - 1) : -1;
      s.mp = (fc.minus > 0 && fc.plus > 0) ? find(fc.minus - 1, fc.plus - 1) : -1;
      s.pm = (fc.minus > 0 && fc.plus > 0) ? find(fc.plus - 1, fc.minus - 1) : -1;
    }
    build_tree();
  }

  const LatticeDomain& domain() const { return *d_; }
  const DomainPtr& domain_ptr() const { return d_; }

  // Solves (D C D^T) u = rhs with C = conductance per interior face (indexed
  // like domain.interior_faces()); u is returned per cell with u[0] = 0.
  // rhs must sum to zero.
  std::vector<double> solve(const std::vector<double>& conductance, const std::vector<double>& rhs,
                            double rel_tol = 1e-11, const std::vector<double>* guess = nullptr) {
    double* v = L_.valuePtr();
    std::fill(v, v + L_.nonZeros(), 0.0);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      const double c = conductance[k];
      const Slots& s = slots_[k];
      if (s.mm >= 0) v[s.mm] += c;
      if (s.pp >= 0) v[s.pp] += c;
      if (s.mp >= 0) v[s.mp] -= c;
      if (s.pm >= 0) v[s.pm] -= c;
    }
    const int n = static_cast<int>(d_->num_cells());
    Eigen::VectorXd b(n - 1), x0(n - 1);
    for (int c = 1; c < n; ++c) b[c - 1] = rhs[c];
    std::vector<double> u(n, 0.0);
    if (b.squaredNorm() == 0) return u;
    cg_.setTolerance(rel_tol);
    cg_.setMaxIterations(4 * n);
    cg_.compute(L_);
    Eigen::VectorXd x;
    if (guess) {
      for (int c = 1; c < n; ++c) x0[c - 1] = (*guess)[c] - (*guess)[0];
      x = cg_.solveWithGuess(b, x0);
    } else {
      x = cg_.solve(b);
    }
    last_iterations_ = static_cast<int>(cg_.iterations());
    for (int c = 1; c < n; ++c) u[c] = x[c - 1];
    return u;
  }

  int last_iterations() const { return last_iterations_; }

  // F_f = C_f (u_minus - u_plus) on interior faces.
  void potential_flux(const std::vector<double>& conductance, const std::vector<double>& u, FluxField& X) const {
    const auto& faces = d_->interior_faces();
    for (std::size_t k = 0; k < faces.size(); ++k) {
      const Face& fc = d_->face(faces[k]);
      X[faces[k]] = conductance[k] * (u[fc.minus] - u[fc.plus]);
    }
  }

  // Adjusts interior fluxes along a spanning tree so that the divergence of X
  // equals target exactly (up to rounding); the mismatch is collected at the
  // root, where it equals Σ(div - target) and vanishes for compatible data.
  void correct(FluxField& X, const std::vector<double>& target) const {
    std::vector<double> err = divergence(X);
    for (std::size_t c = 0; c < err.size(); ++c) err[c] = target[c] - err[c];
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const CellId c = *it;
      const FaceId f = parent_face_[c];
      if (f == kNone) continue;
      const Face& fc = d_->face(f);
      // Raising the flux on f increases the divergence of its minus cell.
      const double delta = fc.minus == c ? err[c] : -err[c];
      X[f] += delta;
      const CellId parent = fc.minus == c ? fc.plus : fc.minus;
      err[parent] += err[c];
      err[c] = 0;
    }
  }

 private:
  struct Slots {
    std::ptrdiff_t mm, pp, mp, pm;
  };

  std::ptrdiff_t find(int row, int col) const {
    // Column-major storage: search column col for row.
    const int* outer = L_.outerIndexPtr();
    const int* inner = L_.innerIndexPtr();
    for (int k = outer[col]; k < outer[col + 1]; ++k)
      if (inner[k] == row) return k;
    throw Error(Errc::invalid_argument, "laplacian pattern lookup failed");
  }

  void build_tree() {
    const int n = static_cast<int>(d_->num_cells());
    parent_face_.assign(n, kNone);
    std::vector<char> seen(n, 0);
    std::queue<CellId> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      const CellId c = q.front();
      q.pop();
      order_.push_back(c);
      for (int k = 0; k < 6; ++k) {
        const FaceId f = d_->cell_face(c, k / 2, k % 2);
        const Face& fc = d_->face(f);
        if (fc.kind != FaceKind::interior) continue;
        const CellId o = fc.minus == c ? fc.plus : fc.minus;
        if (!seen[o]) {
          seen[o] = 1;
          parent_face_[o] = f;
          q.push(o);
        }
      }
    }
  }

  DomainPtr d_;
  Eigen::SparseMatrix<double> L_;
  std::vector<Slots> slots_;
  std::vector<FaceId> parent_face_;
  std::vector<CellId> order_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg_;
  int last_iterations_ = 0;
};

// Field with the given boundary trace and interior divergence, obtained from a
// single unweighted Laplacian solve followed by the exact tree correction.
inline FluxField feasible_field(FluxProjector& P, const BoundaryData& B, const std::vector<double>& target) {
  FluxField X(P.domain_ptr());
  impose_boundary(X, B);
  const std::vector<double> div = divergence(X);
  std::vector<double> rhs(div.size());
  for (std::size_t c = 0; c < div.size(); ++c) rhs[c] = target[c] - div[c];
  const std::vector<double> ones(P.domain().interior_faces().size(), 1.0);
  const std::vector<double> u = P.solve(ones, rhs);
  P.potential_flux(ones, u, X);
  P.correct(X, target);
  return X;
}

}  // namespace intflux

#endif  // INTFLUX_PROJECTOR_HPP
