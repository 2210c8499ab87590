#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace intflux;

namespace {

constexpr double kPi = std::numbers::pi;

double tolerance(int N) { return N >= 48 ? 0.05 : (N >= 32 ? 0.10 : 0.20); }

FluxField centered_monopole(const DomainPtr& d, Vec3* x0 = nullptr) {
  const Vec3 c = test::central_cell_center(*d);
  if (x0) *x0 = c;
  return sample_monopole(d, c);
}

// Smooth radial bump supported in a < |y| < b.
double bump(double r, double a, double b) {
  if (r <= a || r >= b) return 0.0;
  return std::exp(-1.0 / ((r - a) * (b - r)));
}

TEST(EpsilonP, KnownValues) {
  EXPECT_NEAR(epsilon_p(1 + 1e-12), 0.5, 1e-9);
  EXPECT_NEAR(epsilon_p(1.2), 0.30139, 5e-6);
  EXPECT_NEAR(epsilon_p(1.4), 0.181671, 5e-6);
  EXPECT_THROW(epsilon_p(1.5), Error);
}

TEST(RescaledEnergy, ZeroField) { EXPECT_EQ(rescaled_energy(FluxField(build_domain(16)), Vec3::Zero(), 0.5, 1.2), 0.0); }

// The sampled monopole loses energy in the singular cell; the loss is of the
// size of the corner/face-average gap and shrinks under refinement.
TEST(RescaledEnergy, MonopoleConvergesToTheRadialValue) {
  const double exact = monopole_energy(1.2);
  const std::vector<double> radii{0.3, 0.5, 0.7};
  std::vector<double> last(radii.size(), 1e9);
  for (int N : {16, 32, 48}) {
    const DomainPtr d = build_domain(N);
    Vec3 x0;
    const FluxField M = centered_monopole(d, &x0);
    const MonotonicityProfile P = monotonicity_profile(M, x0, 1.2, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      const double theta = rescaled_energy(M, x0, radii[k], 1.2);
      EXPECT_NEAR(theta, P.theta[k], 1e-12 * theta);
      EXPECT_LT(theta, exact);
      EXPECT_LE(exact - theta, 1.5 * P.quad_error[k]) << N << " r " << radii[k];
      EXPECT_LT(exact - theta, last[k]) << N << " r " << radii[k];
      last[k] = exact - theta;
    }
  }
}

TEST(RescaledEnergy, UnitFieldFollowsTheVolume) {
  const DomainPtr d = build_domain(32);
  const double expect = std::pow(0.5, -0.6) * (4 * kPi / 3) * 0.125;
  EXPECT_NEAR(expect, 0.79363, 1e-5);
  EXPECT_NEAR(rescaled_energy(sample_uniform(d, Vec3(0, 0, 1)), Vec3::Zero(), 0.5, 1.2), expect, 0.05 * expect);
}

TEST(RescaledEnergy, BallOutsideDomain) {
  try {
    rescaled_energy(FluxField(build_domain(8)), Vec3(0.5, 0, 0), 0.6, 1.2);
    FAIL() << "expected ball_outside_domain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ball_outside_domain);
  }
}

TEST(RegularityScan, ZeroFieldHasNoFlaggedCells) {
  const RegularityReport r = regularity_scan(FluxField(build_domain(12)), 1.2);
  EXPECT_TRUE(r.flagged.empty());
  EXPECT_NEAR(r.eps_p, epsilon_p(1.2), 1e-15);
}

TEST(RegularityScan, MonopoleFlagsOnlyTheCenter) {
  const DomainPtr d = build_domain(16);
  Vec3 x0;
  const FluxField M = centered_monopole(d, &x0);
  const RegularityReport r = regularity_scan(M, 1.2);
  ASSERT_FALSE(r.flagged.empty());
  EXPECT_NE(std::find(r.flagged.begin(), r.flagged.end(), d->cell_at_point(x0)), r.flagged.end());
  for (CellId c : r.flagged) EXPECT_LE((d->center(c) - x0).norm(), 3 * d->cell_size());
  EXPECT_EQ(cell_clusters(*d, r.flagged).size(), 1u);
}

TEST(RegularityScan, SolverDipoleFlagsBothCharges) {
  const DomainPtr d = build_domain(16);
  ChargeSet C;
  const CellId a = test::cell(*d, 5, 8, 8), b = test::cell(*d, 11, 8, 8);
  C.set(a, 1);
  C.set(b, -1);
  const FluxField X =
      solve_fixed_charges(d, make_boundary_data(std::vector<double>(d->boundary_faces().size(), 0.0)), C, {});
  const RegularityReport r = regularity_scan(X, 1.2);
  for (CellId c : {a, b}) EXPECT_NE(std::find(r.flagged.begin(), r.flagged.end(), c), r.flagged.end());
  const double h = d->cell_size();
  for (CellId c : r.flagged)
    EXPECT_LE(std::min((d->center(c) - d->center(a)).norm(), (d->center(c) - d->center(b)).norm()), 3 * h);
  // The two neighborhoods may touch halfway between the charges.
  EXPECT_LE(cell_clusters(*d, r.flagged).size(), 2u);
}

TEST(RegularityScan, ThresholdParameter) {
  const DomainPtr d = build_domain(16);
  const FluxField M = centered_monopole(d);
  const RegularityReport low = regularity_scan(M, 1.2, {}, 1e-6);
  const RegularityReport high = regularity_scan(M, 1.2, {}, 10.0);
  EXPECT_EQ(high.eps_p, 10.0);
  EXPECT_TRUE(high.flagged.empty());
  EXPECT_GT(low.flagged.size(), regularity_scan(M, 1.2).flagged.size());
}

TEST(MonotonicityProfile, MonopoleIsFlat) {
  for (int N : {32, 48}) {
    const DomainPtr d = build_domain(N);
    Vec3 x0;
    const FluxField M = centered_monopole(d, &x0);
    std::vector<double> radii;
    for (double r = 0.2; r <= 0.9 - x0.norm() + 1e-12; r += 0.05) radii.push_back(r);
    const MonotonicityProfile P = monotonicity_profile(M, x0, 1.2, radii);
    double mean = 0;
    for (double t : P.theta) mean += t / P.theta.size();
    for (std::size_t k = 0; k < radii.size(); ++k) {
      EXPECT_NEAR(P.theta[k], mean, 0.10 * mean) << N << " r " << radii[k];
      EXPECT_LE(radii[k] * P.rhs[k], 0.01 * P.theta[k]);
      EXPECT_LE(monopole_energy(1.2) - P.theta[k], 1.5 * P.quad_error[k]);
    }
  }
}

// Θ(r) = (4π/3) r^{2p}; the tangential integral of a unit field over a sphere
// of radius r is (8π/3) r², so the right side is p (8π/3) r^{2p-1} = dΘ/dr.
TEST(MonotonicityProfile, UnitFieldClosedForm) {
  const DomainPtr d = build_domain(32);
  const double p = 1.2;
  const std::vector<double> radii{0.3, 0.4, 0.5, 0.6, 0.7};
  const MonotonicityProfile P = monotonicity_profile(sample_uniform(d, Vec3(0, 0, 1)), Vec3::Zero(), p, radii);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    EXPECT_NEAR(P.theta[k], 4 * kPi / 3 * std::pow(r, 2 * p), 0.05 * P.theta[k]) << r;
    const double rhs = p * 8 * kPi / 3 * std::pow(r, 2 * p - 1);
    EXPECT_NEAR(P.rhs[k], rhs, 0.10 * rhs) << r;
    if (k > 0 && k + 1 < radii.size()) EXPECT_NEAR(P.dtheta[k], rhs, 0.10 * rhs) << r;
  }
}

TEST(MonotonicityProfile, ZeroField) {
  const MonotonicityProfile P = monotonicity_profile(FluxField(build_domain(16)), Vec3::Zero(), 1.2, {0.2, 0.5, 0.8});
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(P.theta[k], 0.0);
    EXPECT_EQ(P.rhs[k], 0.0);
  }
}

TEST(MonotonicityProfile, RadiiMustIncrease) {
  EXPECT_THROW(monotonicity_profile(FluxField(build_domain(8)), Vec3::Zero(), 1.2, {0.5, 0.3}), Error);
}

TEST(Stationarity, ZeroTestFieldGivesZero) {
  const DomainPtr d = build_domain(16);
  EXPECT_EQ(stationarity_residual(centered_monopole(d), 1.2, [](const Vec3&) { return Vec3::Zero(); }), 0.0);
}

// Radial variations cost nothing for the monopole; the shear X = (0, 0, x) is
// not stationary and a compression along x detects it.
TEST(Stationarity, MonopoleVersusShear) {
  const DomainPtr d = build_domain(32);
  const double p = 1.2;
  Vec3 x0;
  const FluxField M = centered_monopole(d, &x0);
  const auto radial = [x0](const Vec3& x) {
    const Vec3 y = x - x0;
    return Vec3(bump(y.norm(), 0.15, 0.75) * y);
  };
  const double rm = std::abs(stationarity_residual(M, p, radial)) / energy(M, p);
  const FluxField S = sample_field(d, [](const Vec3& x) { return Vec3(0, 0, x[0]); });
  const auto compress = [](const Vec3& x) { return Vec3(bump(x.norm(), -1.0, 0.75) * x[0], 0, 0); };
  const double rs = std::abs(stationarity_residual(S, p, compress)) / energy(S, p);
  EXPECT_GT(rs, 10 * rm);
  EXPECT_LT(rm, 0.01);
}

TEST(Stationarity, SupportViolation) {
  const DomainPtr d = build_domain(12);
  try {
    stationarity_residual(centered_monopole(d), 1.2, [](const Vec3& x) { return x; });
    FAIL() << "expected support_violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::support_violation);
  }
}

TEST(Blowup, IdentityAtUnitScale) {
  oracle::Rng rng(61);
  const DomainPtr d = build_domain(16);
  const oracle::RandomField F = oracle::random_charge_field(d, rng);
  const FluxField B = blowup(F.field, Vec3::Zero(), 1.0);
  EXPECT_EQ(B.domain().resolution(), 16);
  EXPECT_EQ(B.values(), F.field.values());
}

TEST(Blowup, MonopoleIsAFixedPoint) {
  const DomainPtr d = build_domain(32);
  Vec3 x0;
  const FluxField M = centered_monopole(d, &x0);
  const double h = d->cell_size();
  const double lam = (std::floor((1 - x0.norm()) / h - 0.5 - 1e-9) + 0.5) * h;
  const FluxField B = blowup(M, x0, lam);
  const FluxField ref = sample_monopole(B.domain_ptr(), Vec3::Zero());
  double dif = 0, tot = 0;
  for (FaceId f = 0; f < static_cast<FaceId>(B.domain().num_faces()); ++f) {
    dif += std::abs(B[f] - ref[f]);
    tot += std::abs(ref[f]);
  }
  EXPECT_LE(dif / tot, tolerance(32));
  EXPECT_EQ(check_integer_fluxes(B, 1e-9).total(), 1);
}

TEST(Blowup, EnergyIdentityOnAlignedScales) {
  const DomainPtr d = build_domain(32);
  const double p = 1.2;
  const FluxField X = sample_curl(d, [](const Vec3& x) { return Vec3(x[1] * x[2], -x[0] * x[0], 0.5 * x[1]); });
  for (double lam : {0.5, 0.25}) {
    const FluxField B = blowup(X, Vec3::Zero(), lam);
    EXPECT_EQ(B.domain().resolution(), static_cast<int>(32 * lam));
    const double lhs = ball_energy(B, Vec3::Zero(), 1.0, p), rhs = rescaled_energy(X, Vec3::Zero(), lam, p);
    EXPECT_NEAR(lhs, rhs, 1e-6 * rhs) << lam;
  }
}

TEST(Blowup, PreservesFluxThroughCellUnions) {
  const DomainPtr d = build_domain(32);
  const FluxField X = sample_monopole(d, Vec3(0.1, -0.05, 0.02));
  const FluxField B = blowup(X, Vec3::Zero(), 0.5);
  EXPECT_EQ(boundary_trace(B).degree, 1);
  EXPECT_EQ(check_integer_fluxes(B, 1e-9).total(), 1);
}

TEST(Blowup, ScaleOutOfDomain) {
  try {
    blowup(FluxField(build_domain(8)), Vec3(0.5, 0, 0), 0.6);
    FAIL() << "expected scale_out_of_domain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::scale_out_of_domain);
  }
}

TEST(Radiality, MonopoleIsRadialUniformIsNot) {
  for (int N : {16, 32, 48}) {
    const DomainPtr d = build_domain(N);
    Vec3 x0;
    const FluxField M = centered_monopole(d, &x0);
    const double r = 1 - x0.norm() - d->cell_size();
    EXPECT_LE(radiality_defect(M, x0, 1.2, r) / radiality_reference(M, x0, 1.2, r), tolerance(N)) << N;
  }
  const FluxField U = sample_uniform(build_domain(16), Vec3(0, 0, 1));
  const double rel = radiality_defect(U, Vec3::Zero(), 1.2) / radiality_reference(U, Vec3::Zero(), 1.2);
  EXPECT_GT(rel, 0.3);
}

TEST(Homogeneity, MonopoleVersusUniform) {
  for (int N : {16, 32, 48}) {
    const DomainPtr d = build_domain(N);
    HomogeneityOptions opt;
    const FluxField M = centered_monopole(d, &opt.center);
    opt.r_max = 0.9 - opt.center.norm();
    EXPECT_LE(homogeneity_defect(M, opt), tolerance(N)) << N;
  }
  EXPECT_GT(homogeneity_defect(sample_uniform(build_domain(16), Vec3(0, 0, 1))), 1.0);
}

TEST(BoxCount, EmptySetGivesZeros) {
  for (const BoxCountRow& row : box_count(*build_domain(16), {}, 0.6)) {
    EXPECT_EQ(row.count, 0);
    EXPECT_EQ(row.premeasure, 0.0);
  }
}

TEST(BoxCount, SingleCellCountsOnce) {
  const DomainPtr d = build_domain(16);
  for (const BoxCountRow& row : box_count(*d, {test::cell(*d, 7, 8, 9)}, 0.6)) {
    EXPECT_EQ(row.count, 1);
    EXPECT_DOUBLE_EQ(row.premeasure, std::pow(row.delta, 0.6));
  }
}

TEST(BoxCount, ExponentRange) {
  const DomainPtr d = build_domain(8);
  EXPECT_THROW(box_count(*d, {}, 0.0), Error);
  EXPECT_THROW(box_count(*d, {}, 3.0), Error);
}

TEST(Clusters, DiameterAndGrouping) {
  const DomainPtr d = build_domain(16);
  const std::vector<CellId> cells{test::cell(*d, 4, 4, 8), test::cell(*d, 5, 5, 8), test::cell(*d, 11, 8, 8)};
  const auto cl = cell_clusters(*d, cells);
  ASSERT_EQ(cl.size(), 2u);
  std::vector<int> diam;
  for (const auto& c : cl) diam.push_back(cluster_diameter(*d, c));
  std::sort(diam.begin(), diam.end());
  EXPECT_EQ(diam, (std::vector<int>{1, 2}));
}

}  // namespace
