#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "support.hpp"

using namespace intflux;
using intflux::test::central_cell_center;

namespace {

constexpr double kBallVolume = 4.0 * std::numbers::pi / 3.0;

TEST(BuildDomain, SmallestResolutionHasSomeButNotAllCells) {
  const DomainPtr d = build_domain(4, 1.0);
  EXPECT_GT(d->num_cells(), 0u);
  EXPECT_LT(d->num_cells(), 64u);
  EXPECT_FALSE(d->boundary_faces().empty());
}

TEST(BuildDomain, RejectsTooCoarseResolution) {
  try {
    build_domain(3, 1.0);
    FAIL() << "expected resolution_too_small";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::resolution_too_small);
  }
}

TEST(BuildDomain, BoundaryAreasCancel) {
  for (int N : {4, 5, 7, 16, 33})
    for (double R : {0.5, 1.0, 2.5}) {
      const DomainPtr d = build_domain(N, R);
      EXPECT_LT(boundary_area_sum(*d).norm(), 1e-12 * R * R) << "N=" << N << " R=" << R;
    }
}

TEST(BuildDomain, VolumeApproachesBall) {
  const DomainPtr d = build_domain(32, 1.0);
  const double h = d->cell_size();
  EXPECT_NEAR(d->num_cells() * h * h * h, kBallVolume, 0.05 * kBallVolume);
}

TEST(BuildDomain, EveryFaceClassifiedOnce) {
  const DomainPtr d = build_domain(12, 1.0);
  EXPECT_EQ(d->interior_faces().size() + d->boundary_faces().size(), d->num_faces());
  std::vector<int> hits(d->num_faces(), 0);
  for (FaceId f : d->interior_faces()) {
    ++hits[f];
    EXPECT_NE(d->face(f).minus, kNone);
    EXPECT_NE(d->face(f).plus, kNone);
  }
  for (FaceId f : d->boundary_faces()) {
    ++hits[f];
    EXPECT_TRUE((d->face(f).minus == kNone) != (d->face(f).plus == kNone));
  }
  for (int h : hits) EXPECT_EQ(h, 1);
  // Each cell sees exactly six classified faces.
  for (CellId c = 0; c < static_cast<CellId>(d->num_cells()); ++c)
    for (int k = 0; k < 6; ++k) EXPECT_NE(d->cell_face(c, k / 2, k % 2), kNone);
}

TEST(BuildDomain, CellsAreConnected) {
  for (int N : {4, 9, 20}) EXPECT_TRUE(cells_connected(*build_domain(N, 1.0)));
}

TEST(Divergence, ZeroFieldIsZero) {
  const DomainPtr d = build_domain(8);
  for (double v : divergence(FluxField(d))) EXPECT_EQ(v, 0.0);
}

TEST(Divergence, UniformFieldTelescopes) {
  const DomainPtr d = build_domain(16);
  const double h = d->cell_size();
  FluxField X(d);
  for (FaceId f = 0; f < static_cast<FaceId>(d->num_faces()); ++f)
    if (d->face(f).axis == 2) X[f] = h * h;
  for (double v : divergence(X)) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Divergence, SampledMonopoleIsAUnitCharge) {
  const DomainPtr d = build_domain(32);
  const Vec3 x0 = central_cell_center(*d);
  const CellId c0 = d->cell_at_point(x0);
  const std::vector<double> div = divergence(sample_monopole(d, x0));
  for (CellId c = 0; c < static_cast<CellId>(div.size()); ++c)
    EXPECT_NEAR(div[c], c == c0 ? 1.0 : 0.0, 1e-9);
}

// Σ divergence over a cell union equals the net outflow across its boundary.
TEST(Divergence, DiscreteDivergenceTheorem) {
  oracle::Rng rng(11);
  const DomainPtr d = build_domain(10);
  for (int trial = 0; trial < 20; ++trial) {
    const FluxField X = test::random_flux(d, rng);
    const Vec3 x0(oracle::uniform(rng, -0.4, 0.4), oracle::uniform(rng, -0.4, 0.4), oracle::uniform(rng, -0.4, 0.4));
    const Region U = Region::ball(d, x0, oracle::uniform(rng, 0.2, 0.6));
    const std::vector<double> div = divergence(X);
    double lhs = 0, rhs = 0, scale = 0;
    for (CellId c = 0; c < static_cast<CellId>(div.size()); ++c)
      if (U.contains(c)) lhs += div[c];
    for (FaceId f : U.boundary_faces()) {
      rhs += U.outward_sign(f) * X[f];
      scale += std::abs(X[f]);
    }
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, scale));
  }
}

TEST(CheckIntegerFluxes, DivergenceFreeGivesNoCharges) {
  const DomainPtr d = build_domain(12);
  const FluxField X = sample_curl(d, [](const Vec3& x) { return Vec3(-x[1], x[0] * x[2], 0.3 * x[0]); });
  EXPECT_TRUE(check_integer_fluxes(X, 1e-6).empty());
}

TEST(CheckIntegerFluxes, HalfChargeIsRejected) {
  const DomainPtr d = build_domain(8);
  FluxField X(d);
  X[d->interior_faces().front()] = 0.5;
  try {
    check_integer_fluxes(X, 0.1);
    FAIL() << "expected non_integral_divergence";
  } catch (const NonIntegralDivergence& e) {
    EXPECT_EQ(e.code(), Errc::non_integral_divergence);
    EXPECT_NEAR(e.deviation(), 0.5, 1e-15);
  }
}

TEST(CheckIntegerFluxes, MonopoleChargeSet) {
  const DomainPtr d = build_domain(32);
  const Vec3 x0 = central_cell_center(*d);
  const ChargeSet C = check_integer_fluxes(sample_monopole(d, x0));
  ASSERT_EQ(C.size(), 1u);
  EXPECT_EQ(C.at(d->cell_at_point(x0)), 1);
  EXPECT_EQ(C.total(), boundary_trace(sample_monopole(d, x0)).degree);
}

TEST(CheckIntegerFluxes, ChargesSumToDegree) {
  oracle::Rng rng(5);
  const DomainPtr d = build_domain(8);
  for (int trial = 0; trial < 10; ++trial) {
    const oracle::RandomField F = oracle::random_charge_field(d, rng);
    const ChargeSet C = check_integer_fluxes(F.field, 1e-9);
    EXPECT_EQ(C.map(), F.charges.map());
    EXPECT_EQ(C.total(), boundary_trace(F.field).degree);
  }
}

TEST(Energy, ZeroFieldHasZeroEnergy) { EXPECT_EQ(energy(FluxField(build_domain(8)), 1.2), 0.0); }

TEST(Energy, UnitFieldGivesVolume) {
  const DomainPtr d = build_domain(32);
  EXPECT_NEAR(energy(sample_uniform(d, Vec3(0, 0, 1)), 1.2), kBallVolume, 0.05 * kBallVolume);
}

TEST(Energy, SampledMonopole) {
  const DomainPtr d = build_domain(48);
  const double expect = std::pow(4 * std::numbers::pi, -0.2) / 0.6;
  EXPECT_NEAR(expect, 1.0047, 1e-4);
  EXPECT_NEAR(energy(sample_monopole(d, central_cell_center(*d)), 1.2), expect, 0.10 * expect);
}

TEST(Energy, ExponentRange) {
  const FluxField X(build_domain(8));
  for (double p : {1.0, 1.5, 1.6, 0.5}) {
    try {
      energy(X, p);
      FAIL() << "p=" << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::exponent_out_of_range);
      EXPECT_NE(std::string(e.what()).find("]1, 3/2["), std::string::npos);
    }
  }
}

TEST(Energy, StrictlyConvex) {
  oracle::Rng rng(3);
  const DomainPtr d = build_domain(8);
  for (int trial = 0; trial < 20; ++trial) {
    const double p = oracle::uniform(rng, 1.05, 1.45);
    const FluxField X = test::random_flux(d, rng), Y = test::random_flux(d, rng);
    FluxField M = X;
    M += Y;
    M *= 0.5;
    for (Quadrature q : {Quadrature::corner, Quadrature::face_average}) {
      const double mid = energy(M, p, q), avg = 0.5 * (energy(X, p, q) + energy(Y, p, q));
      EXPECT_LT(mid, avg * (1 - 1e-6));
    }
    EXPECT_EQ(energy(X, p), 0.5 * (energy(X, p) + energy(X, p)));
  }
}

TEST(Energy, PositiveForNonzeroField) {
  const DomainPtr d = build_domain(8);
  FluxField X(d);
  X[d->boundary_faces()[3]] = 1e-8;
  EXPECT_GT(energy(X, 1.3), 0.0);
}

TEST(BoundaryTrace, ZeroField) {
  const BoundaryData B = boundary_trace(FluxField(build_domain(8)));
  EXPECT_EQ(B.degree, 0);
  for (double v : B.flux) EXPECT_EQ(v, 0.0);
}

TEST(BoundaryTrace, MonopoleHasDegreeOne) {
  const DomainPtr d = build_domain(16);
  EXPECT_EQ(boundary_trace(sample_monopole(d, central_cell_center(*d))).degree, 1);
}

TEST(BoundaryTrace, DivergenceFreeHasDegreeZero) {
  const DomainPtr d = build_domain(16);
  const FluxField X = sample_curl(d, [](const Vec3& x) { return Vec3(x[1] * x[1], -x[2], x[0] + x[1]); });
  const BoundaryData B = boundary_trace(X);
  EXPECT_EQ(B.degree, 0);
  EXPECT_GT(B.mass(), 0.1);
}

TEST(BoundaryTrace, NonIntegralDegree) {
  const DomainPtr d = build_domain(8);
  FluxField X(d);
  X[d->boundary_faces()[0]] = 0.3;
  try {
    boundary_trace(X);
    FAIL() << "expected non_integral_degree";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_integral_degree);
  }
}

TEST(BoundaryTrace, ImposeThenTraceRoundTrips) {
  const DomainPtr d = build_domain(16);
  const BoundaryData B = uniform_degree_boundary(d, 2);
  FluxField X(d);
  impose_boundary(X, B);
  const BoundaryData T = boundary_trace(X);
  EXPECT_EQ(T.degree, 2);
  EXPECT_EQ(T.flux, B.flux);
}

TEST(FieldIo, TextRoundTripIsBitExact) {
  oracle::Rng rng(1);
  const DomainPtr d = build_domain(7, 1.3);
  const FluxField X = test::random_flux(d, rng, 1e3);
  std::stringstream ss;
  write_field_text(ss, X);
  const FluxField Y = read_field_text(ss);
  EXPECT_EQ(Y.domain().resolution(), 7);
  EXPECT_EQ(Y.domain().radius(), 1.3);
  EXPECT_EQ(Y.values(), X.values());
}

TEST(FieldIo, BinaryRoundTripIsBitExact) {
  oracle::Rng rng(2);
  const DomainPtr d = build_shell(12, 1.4, 1.0, 1.3);
  const FluxField X = test::random_flux(d, rng);
  std::stringstream ss;
  write_field_binary(ss, X);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 16), std::string(kBinaryMagic.begin(), kBinaryMagic.end()));
  const FluxField Y = read_field_binary(ss);
  EXPECT_EQ(Y.domain().inner_radius(), 1.0);
  EXPECT_EQ(Y.values(), X.values());
}

TEST(FieldIo, ShellHeaderRoundTrips) {
  const DomainPtr d = build_shell(10, 1.25, 1.0, 1.2);
  std::stringstream ss;
  write_field_text(ss, FluxField(d));
  const FluxField Y = read_field_text(ss);
  EXPECT_EQ(Y.domain().spec().half_width, 1.25);
  EXPECT_EQ(Y.domain().num_faces(), d->num_faces());
}

TEST(FieldIo, TruncatedTextReportsLine) {
  const DomainPtr d = build_domain(6);
  std::stringstream ss;
  write_field_text(ss, FluxField(d));
  const std::string full = ss.str();
  std::istringstream cut(full.substr(0, full.size() / 2));
  try {
    read_field_text(cut);
    FAIL() << "expected parse_error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(FieldIo, MalformedRecordReportsItsLine) {
  std::istringstream in("fluxfield v1 4 1\n\n0 1 x 1 0.5\n");
  try {
    read_field_text(in);
    FAIL() << "expected parse_error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

}  // namespace
