#include <gtest/gtest.h>

#include "support.hpp"

using namespace intflux;

namespace {

// Cube layout with lattice spacing h leaving room for the outer sphere.
struct Layout {
  int N;
  double L;
};

Layout layout(double eps, double h) {
  const int N = 2 * static_cast<int>(std::ceil((1 + eps + 3 * h) / h));
  return {N, N * h / 2};
}

// Radial inner-sphere data of a field sampled on the shell, made exactly compatible.
std::vector<double> inner_data(const DomainPtr& sd, const FluxField& U) {
  const std::vector<FaceId> inner = inner_boundary_faces(*sd);
  std::vector<double> g(inner.size());
  double gs = 0;
  for (std::size_t k = 0; k < inner.size(); ++k) gs += (g[k] = -sd->face(inner[k]).outward_sign() * U[inner[k]]);
  for (double& x : g) x -= gs / static_cast<double>(g.size());
  return g;
}

// Divergence-free helix: swirl about the z-axis plus a weak axial drift.
FluxField helix(const DomainPtr& d) {
  return sample_curl(d, [](const Vec3& x) {
    return Vec3(-0.0125 * x[1], 0.0125 * x[0], -0.025 * (x[0] * x[0] + x[1] * x[1]));
  });
}

TEST(NeumannInterpolant, ZeroDataGivesZero) {
  const DomainPtr sd = build_shell(24, 1.3, 1.0, 1.2);
  const FluxField W = neumann_interpolant(sd, std::vector<double>(inner_boundary_faces(*sd).size(), 0.0));
  EXPECT_EQ(W.mass(), 0.0);
}

TEST(NeumannInterpolant, HarmonicAndTraceExact) {
  const DomainPtr sd = build_shell(30, 1.3, 1.0, 1.2);
  const std::vector<double> g = inner_data(sd, sample_uniform(sd, Vec3(0, 0, 0.06)));
  const FluxField W = neumann_interpolant(sd, g);
  for (double v : divergence(W)) EXPECT_NEAR(v, 0.0, 1e-8);
  const std::vector<FaceId> inner = inner_boundary_faces(*sd);
  for (std::size_t k = 0; k < inner.size(); ++k)
    EXPECT_NEAR(-sd->face(inner[k]).outward_sign() * W[inner[k]], g[k], 1e-12);
  for (FaceId f : sd->boundary_faces())
    if (sd->face(f).side == BoundarySide::outer) EXPECT_EQ(W[f], 0.0);
}

TEST(NeumannInterpolant, IncompatibleData) {
  const DomainPtr sd = build_shell(24, 1.3, 1.0, 1.2);
  std::vector<double> g(inner_boundary_faces(*sd).size(), 0.0);
  g[0] = 0.1;
  try {
    neumann_interpolant(sd, g);
    FAIL() << "expected incompatible_data";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::incompatible_data);
  }
}

TEST(NeumannInterpolant, HalvingTheShellObeysTheScalingLaw) {
  const double p = 1.2, h = 1.0 / 32;
  std::vector<double> norms;
  for (double eps : {0.2, 0.1}) {
    const Layout l = layout(eps, h);
    const DomainPtr sd = build_shell(l.N, l.L, 1.0, 1.0 + eps);
    norms.push_back(std::pow(energy(neumann_interpolant(sd, inner_data(sd, sample_uniform(sd, Vec3(0.03, 0, 0.05)))), p), 1 / p));
  }
  EXPECT_GT(norms[1], norms[0]);
  EXPECT_LE(norms[1] / norms[0], std::pow(2.0, 1 / p) * 1.2);
}

TEST(BuildInterpolant, ZeroInputGivesZero) {
  const Layout l = layout(0.1, 1.0 / 16);
  const InterpolantResult r = build_interpolant(FluxField(build_domain(l.N, l.L)), 0.1);
  EXPECT_EQ(r.field.mass(), 0.0);
  EXPECT_EQ(r.constant, 0.0);
}

TEST(BuildInterpolant, MonopoleViolatesZeroFlux) {
  const Layout l = layout(0.1, 1.0 / 16);
  const DomainPtr d = build_domain(l.N, l.L);
  try {
    build_interpolant(sample_monopole(d, test::central_cell_center(*d)), 0.1);
    FAIL() << "expected hypothesis_violated";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::hypothesis_violated);
  }
}

TEST(BuildInterpolant, LargeInnerMassViolatesHypothesis) {
  const Layout l = layout(0.1, 1.0 / 16);
  const DomainPtr d = build_domain(l.N, l.L);
  try {
    build_interpolant(sample_uniform(d, Vec3(0, 0, 0.3)), 0.1);
    FAIL() << "expected hypothesis_violated";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::hypothesis_violated);
  }
}

TEST(BuildInterpolant, HelixIsCutOffLocally) {
  const double eps = 0.1;
  const Layout l = layout(eps, 1.0 / 20);
  const DomainPtr d = build_domain(l.N, l.L);
  const FluxField Y = helix(d);
  const InterpolantResult r = build_interpolant(Y, eps);
  EXPECT_GT(r.sphere_norm, 0.0);
  EXPECT_LT(r.constant, 50.0);
  EXPECT_LE(r.norm_after, r.norm_before + 50.0 * std::pow(eps, -1 / 1.2) * r.sphere_norm);

  const Region shell = Region::ball(d, Vec3::Zero(), 1.0 + eps, 1.0);
  auto inner = [&](CellId c) { return c != kNone && !shell.contains(c) && d->center(c).norm() <= 1.0; };
  for (FaceId f = 0; f < static_cast<FaceId>(d->num_faces()); ++f) {
    const Face& fc = d->face(f);
    if (shell.has_face(f)) continue;
    if (inner(fc.minus) || inner(fc.plus))
      EXPECT_EQ(r.field[f], Y[f]);
    else
      EXPECT_EQ(r.field[f], 0.0);
  }
  // Zero divergence everywhere, including the shell.
  for (double v : divergence(r.field)) EXPECT_NEAR(v, 0.0, 1e-8);
}

TEST(BuildInterpolant, ShellTermGrowsSlowlyWhenHalvingEps) {
  const double p = 1.2, h = 1.0 / 20;
  std::vector<double> shell_term;
  for (double eps : {0.2, 0.1}) {
    const Layout l = layout(eps, h);
    const DomainPtr d = build_domain(l.N, l.L);
    const InterpolantResult r = build_interpolant(helix(d), eps, p);
    shell_term.push_back(r.norm_after);
  }
  EXPECT_LE(shell_term[1] / shell_term[0], std::pow(2.0, 1 / p) * 1.2);
}

TEST(BuildInterpolant, RequiresRoomForTheShell) {
  const DomainPtr d = build_domain(16, 1.05);
  EXPECT_THROW(build_interpolant(FluxField(d), 0.1), Error);
}

}  // namespace
