#include <gtest/gtest.h>

#include "support.hpp"

using namespace intflux;

namespace {

SolveConfig config() {
  SolveConfig cfg;
  cfg.p = 1.2;
  return cfg;
}

BoundaryData zero_boundary(const DomainPtr& d) {
  return make_boundary_data(std::vector<double>(d->boundary_faces().size(), 0.0));
}

ChargeSet at(CellId c, int q) {
  ChargeSet C;
  C.set(c, q);
  return C;
}

// Random closed loop of unit Euclidean norm with zero boundary flux.
FluxField random_loop_direction(const DomainPtr& d, oracle::Rng& rng) {
  FluxField Z(d);
  while (Z.mass() == 0) {
    const CellId u = oracle::uniform_int(rng, 0, static_cast<int>(d->num_cells()) - 1);
    const CellId v = oracle::uniform_int(rng, 0, static_cast<int>(d->num_cells()) - 1);
    if (u == v) continue;
    oracle::detail::push_route(Z, oracle::detail::random_route(*d, rng, u, v), 1.0);
    oracle::detail::push_route(Z, oracle::detail::random_route(*d, rng, v, u), 1.0);
  }
  double n2 = 0;
  for (double v : Z.values()) n2 += v * v;
  Z *= 1.0 / std::sqrt(n2);
  return Z;
}

TEST(SolveFixedCharges, ZeroDataGivesZeroField) {
  const DomainPtr d = build_domain(12);
  const FluxField X = solve_fixed_charges(d, zero_boundary(d), ChargeSet{}, config());
  EXPECT_EQ(X.mass(), 0.0);
  EXPECT_EQ(energy(X, 1.2), 0.0);
}

TEST(SolveFixedCharges, MonopoleEnergy) {
  const DomainPtr d = build_domain(32);
  const CellId c0 = d->cell_at_point(test::central_cell_center(*d));
  const FluxField X = solve_fixed_charges(d, uniform_degree_boundary(d, 1), at(c0, 1), config());
  EXPECT_NEAR(energy(X, 1.2), monopole_energy(1.2), 0.10 * monopole_energy(1.2));
}

TEST(SolveFixedCharges, ConstraintsHoldExactly) {
  const DomainPtr d = build_domain(16);
  ChargeSet C;
  C.set(test::cell(*d, 5, 8, 8), 1);
  C.set(test::cell(*d, 10, 8, 8), 2);
  C.set(test::cell(*d, 8, 4, 7), -1);
  const BoundaryData B = uniform_degree_boundary(d, 2);
  const FluxField X = solve_fixed_charges(d, B, C, config());
  EXPECT_EQ(check_integer_fluxes(X, 1e-9).map(), C.map());
  const BoundaryData T = boundary_trace(X);
  for (std::size_t b = 0; b < B.flux.size(); ++b) EXPECT_NEAR(T.flux[b], B.flux[b], 1e-15);
}

TEST(SolveFixedCharges, InfeasibleCharges) {
  const DomainPtr d = build_domain(8);
  try {
    solve_fixed_charges(d, zero_boundary(d), at(0, 1), config());
    FAIL() << "expected infeasible_charges";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::infeasible_charges);
  }
}

// First-order optimality on divergence-free, boundary-zero test directions.
TEST(SolveFixedCharges, FirstOrderOptimality) {
  const DomainPtr d = build_domain(16);
  const SolveConfig cfg = config();
  const CellId c0 = d->cell_at_point(test::central_cell_center(*d));
  const FluxField X = solve_fixed_charges(d, uniform_degree_boundary(d, 1), at(c0, 1), cfg);
  const double E = energy(X, cfg.p);
  oracle::Rng rng(51);
  for (int k = 0; k < 20; ++k) {
    const FluxField Z = random_loop_direction(d, rng);
    for (double t : {1e-3, 1e-4}) {
      FluxField Y = X;
      FluxField tZ = Z;
      tZ *= t;
      Y += tZ;
      EXPECT_GE(energy(Y, cfg.p), E - cfg.convex_tol * t - 1e-12 * E) << "direction " << k << " t " << t;
      tZ *= -2.0;
      Y += tZ;
      EXPECT_GE(energy(Y, cfg.p), E - cfg.convex_tol * t - 1e-12 * E) << "direction " << k << " t " << -t;
    }
  }
}

TEST(SolveFixedCharges, DipoleEnergyGrowsWithSeparation) {
  const DomainPtr d = build_domain(16);
  const SolveConfig cfg = config();
  const BoundaryData B0 = zero_boundary(d);
  const CellId c0 = d->cell_at_point(test::central_cell_center(*d));
  const double single = energy(solve_fixed_charges(d, uniform_degree_boundary(d, 1), at(c0, 1), cfg), cfg.p);
  double last = 0;
  for (int sep : {1, 2, 4}) {
    ChargeSet C;
    C.set(test::cell(*d, 8 - sep / 2 - sep % 2, 8, 8), 1);
    C.set(test::cell(*d, 8 + sep / 2, 8, 8), -1);
    const double E = energy(solve_fixed_charges(d, B0, C, cfg), cfg.p);
    EXPECT_GT(E, last) << "separation " << sep;
    EXPECT_LT(E, 2 * single);
    last = E;
  }
}

TEST(SolveFixedCharges, OutputIsDeterministic) {
  const DomainPtr d = build_domain(12);
  ChargeSet C;
  C.set(test::cell(*d, 4, 6, 6), 1);
  const BoundaryData B = uniform_degree_boundary(d, 1);
  EXPECT_EQ(solve_fixed_charges(d, B, C, config()).values(), solve_fixed_charges(d, B, C, config()).values());
}

std::vector<HistoryEntry> accepted(const MinimizeResult& r) {
  std::vector<HistoryEntry> out;
  for (const HistoryEntry& h : r.history)
    if (h.move.rfind("rejected", 0) != 0) out.push_back(h);
  return out;
}

TEST(Minimize, ZeroBoundaryStaysZero) {
  const DomainPtr d = build_domain(12);
  const MinimizeResult r = minimize(d, zero_boundary(d), config());
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.charges.empty());
  EXPECT_EQ(r.field.mass(), 0.0);
  EXPECT_EQ(r.energy, 0.0);
}

TEST(Minimize, DegreeOneFindsACentralMonopole) {
  const DomainPtr d = build_domain(16);
  const MinimizeResult r = minimize(d, uniform_degree_boundary(d, 1), config());
  EXPECT_TRUE(r.converged);
  ASSERT_EQ(r.charges.size(), 1u);
  const auto [c, q] = *r.charges.begin();
  EXPECT_EQ(q, 1);
  EXPECT_LE(d->center(c).norm(), 2 * d->cell_size());
  EXPECT_NEAR(r.energy, monopole_energy(1.2), 0.20 * monopole_energy(1.2));
  EXPECT_EQ(check_integer_fluxes(r.field, 1e-9).map(), r.charges.map());
}

TEST(Minimize, FarChargeMovesTowardsTheCenter) {
  const DomainPtr d = build_domain(16);
  const SolveConfig cfg = config();
  const CellId start = test::cell(*d, 3, 8, 8);
  const MinimizeResult r = minimize(d, uniform_degree_boundary(d, 1), cfg, at(start, 1));
  ASSERT_EQ(r.charges.size(), 1u);
  EXPECT_LT(d->center(r.charges.begin()->first).norm(), d->center(start).norm());
  const std::vector<HistoryEntry> acc = accepted(r);
  ASSERT_GE(acc.size(), 2u);
  for (std::size_t k = 1; k < acc.size(); ++k) EXPECT_LE(acc[k].energy, acc[k - 1].energy - cfg.convex_tol);
}

TEST(Minimize, SmallDegreeZeroDataClearsSpuriousCharges) {
  const DomainPtr d = build_domain(16);
  ChargeSet C;
  C.set(test::cell(*d, 6, 8, 8), 1);
  C.set(test::cell(*d, 10, 8, 8), -1);
  const MinimizeResult r = minimize(d, dipole_cap_boundary(d, 0.2), config(), C);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.charges.empty());
  EXPECT_TRUE(check_integer_fluxes(r.field, 1e-9).empty());
}

TEST(Minimize, IsDeterministic) {
  const DomainPtr d = build_domain(12);
  const BoundaryData B = uniform_degree_boundary(d, 1);
  const MinimizeResult a = minimize(d, B, config()), b = minimize(d, B, config());
  EXPECT_EQ(a.field.values(), b.field.values());
  EXPECT_EQ(a.history.size(), b.history.size());
}

TEST(SolveConfig, RejectsBadValues) {
  SolveConfig cfg;
  cfg.p = 1.6;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.p = 1.2;
  cfg.convex_tol = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
