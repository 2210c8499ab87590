#ifndef INTFLUX_VERIFY_HPP
#define INTFLUX_VERIFY_HPP

// Acceptance suites. Each criterion reports pass/fail with the measured
// values; solver runs shared between criteria are computed once per context.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "intflux/analysis.hpp"
#include "intflux/chargegraph.hpp"
#include "intflux/config.hpp"
#include "intflux/decompose.hpp"
#include "intflux/interpolant.hpp"
#include "intflux/mincut.hpp"
#include "intflux/oracles.hpp"
#include "intflux/run.hpp"

namespace intflux {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

// Relative tolerance of lattice-versus-analytic comparisons at resolution N.
inline double quadrature_tolerance(int N) { return N >= 48 ? 0.05 : (N >= 32 ? 0.10 : 0.20); }

class VerifyContext {
 public:
  explicit VerifyContext(std::ostream* log = nullptr) : log_(log) {}

  struct TimedRun {
    SolveArtifacts art;
    double seconds = 0;
  };

  // Preset run, optionally at another resolution.
  const TimedRun& run(const std::string& preset, int N = 0) {
    RunConfig cfg = preset_config(preset);
    if (N > 0) cfg.N = N;
    const std::string key = preset + "/" + std::to_string(cfg.N);
    auto it = runs_.find(key);
    if (it != runs_.end()) return *it->second;
    note("solving preset " + preset + " at N = " + std::to_string(cfg.N));
    auto t0 = std::chrono::steady_clock::now();
    auto r = std::make_unique<TimedRun>();
    r->art = run_solve(cfg);
    r->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return *runs_.emplace(key, std::move(r)).first->second;
  }

  void note(const std::string& s) {
    if (log_) *log_ << "  .. " << s << std::endl;
  }

 private:
  std::ostream* log_;
  std::map<std::string, std::unique_ptr<TimedRun>> runs_;
};

namespace verify_detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

inline CriterionResult monopole_energy(VerifyContext& ctx) {
  CriterionResult r{1, "monopole energy oracle", true, ""};
  const double p = 1.2, target = intflux::monopole_energy(p);
  std::ostringstream os;
  double err32 = 0, err48 = 0;
  for (int N : {32, 48}) {
    const auto& run = ctx.run("monopole", N);
    const LatticeDomain& d = *run.art.domain;
    const ChargeSet& C = run.art.result.charges;
    bool one = C.size() == 1 && C.begin()->second == 1;
    double dist = -1;
    if (one) dist = d.center(C.begin()->first).norm();
    const bool near = one && dist <= 2 * d.cell_size() + 1e-12;
    const double err = (run.art.result.energy - target) / target;
    (N == 32 ? err32 : err48) = std::abs(err);
    const bool ok = one && near && std::abs(err) <= 0.10 && run.seconds <= 300 && run.art.result.converged;
    r.pass = r.pass && ok;
    os << "N=" << N << ": charges=" << C.count() << (one ? " (+1)" : "") << " dist=" << fmt(dist / d.cell_size(), 3)
       << "h E=" << fmt(run.art.result.energy, 6) << " rel.err=" << fmt(err, 3) << " t=" << fmt(run.seconds, 3)
       << "s; ";
  }
  const bool decreases = err48 < err32;
  r.pass = r.pass && decreases;
  os << "target " << fmt(target, 6) << ", error decreases: " << (decreases ? "yes" : "no");
  r.detail = os.str();
  return r;
}

inline CriterionResult epsilon_regularity(VerifyContext& ctx) {
  CriterionResult r{2, "epsilon-regularity", false, ""};
  const auto& run = ctx.run("dipole-cap");
  const RegularityReport rep = regularity_scan(run.art.result.field, 1.2);
  const bool ok = run.art.result.charges.empty() && rep.flagged.empty() && run.seconds <= 120;
  r.pass = ok;
  r.detail = "boundary mass " + fmt(run.art.boundary.mass()) + ", interior charges " +
             std::to_string(run.art.result.charges.count()) + ", flagged " + std::to_string(rep.flagged.size()) +
             ", untested " + std::to_string(rep.untested.size()) + ", t=" + fmt(run.seconds, 3) + "s";
  return r;
}

inline CriterionResult charge_elimination(VerifyContext&) {
  CriterionResult r{3, "charge elimination", true, ""};
  oracle::Rng rng(3);
  const DomainPtr d = build_domain(8, 1.0);
  const double p = 1.2;
  int strict = 0, failures = 0, cases = 0;
  double worst_defect = 0, worst_ratio = 0;
  std::string first_error;
  for (int n = 0; n < 100; ++n) {
    const oracle::RandomField F = oracle::random_charge_field(d, rng);
    try {
      const ChargeSet C = check_integer_fluxes(F.field);
      const PathDecomposition D = decompose(F.field, C);
      const ChargeGraph G = build_graph(D, boundary_trace(F.field));
      const EliminationResult er = eliminate_charges(G);
      const FluxField Xb = realize(F.field, D, er.ops);
      const double defect = kirchhoff_defect(er.graph);
      const double E0 = energy(F.field, p), E1 = energy(Xb, p);
      double maxdiv = 0;
      for (double v : divergence(Xb)) maxdiv = std::max(maxdiv, std::abs(v));
      worst_defect = std::max(worst_defect, std::max(defect, maxdiv));
      worst_ratio = std::max(worst_ratio, E1 / E0);
      bool ok = defect <= 1e-9 && maxdiv <= 1e-9 && E1 <= E0 * (1 + 1e-12);
      if (er.energy_decreased) {
        ok = ok && E1 < E0;
        strict += E1 < E0;
      }
      ++cases;
      if (!ok) ++failures;
    } catch (const Error& e) {
      ++failures;
      if (first_error.empty()) first_error = e.what();
    }
  }
  r.pass = failures == 0;
  r.detail = std::to_string(cases) + " graphs, failures " + std::to_string(failures) + ", max defect " +
             fmt(worst_defect) + ", max E_out/E_in " + fmt(worst_ratio, 6) + ", strict decreases " +
             std::to_string(strict) + (first_error.empty() ? "" : ", first error: " + first_error);
  return r;
}

inline CriterionResult mincut_duality(VerifyContext&) {
  CriterionResult r{4, "min-cut duality and generic case", true, ""};
  oracle::Rng rng(4);
  double worst = 0;
  for (int n = 0; n < 200; ++n) {
    const ChargeGraph G = oracle::random_graph(rng, 12);
    for (bool und : {false, true}) {
      const FlowOptions opt{und};
      const double flow = max_flow(G, {0}, {1}, opt).value;
      const double cut = min_cut(G, {0}, {1}, opt).value;
      const double brute = oracle::brute_force_min_cut(G, {0}, {1}, und);
      worst = std::max({worst, std::abs(flow - brute), std::abs(cut - brute)});
    }
  }
  const bool duality = worst <= 1e-9;

  int accepted = 0, drawn = 0, lemma_fail = 0;
  double worst_gap = 0, worst_d = 0;
  while (accepted < 100 && drawn < 100000) {
    ++drawn;
    const oracle::GenericInstance I = oracle::random_generic_instance(rng);
    if (!oracle::bcde_is_minimal(I)) continue;
    ++accepted;
    try {
      const CutResult ab = generic_case_cut(I.graph, I.groups);
      const double brute =
          oracle::brute_force_min_cut(I.graph, {ChargeGraph::kBoundaryIn}, {ChargeGraph::kBoundaryOut}, true);
      worst_gap = std::max(worst_gap, std::abs(ab.value - brute));
      worst_d = std::max(worst_d, I.d);
    } catch (const Error&) {
      ++lemma_fail;
    }
  }
  const bool lemma = accepted == 100 && lemma_fail == 0 && worst_gap <= 1e-9 && worst_d <= 1e-9;

  // The five-charge example.
  const oracle::FigureInstance fig = oracle::figure_instance();
  const double fig_flow =
      max_flow(fig.graph, {ChargeGraph::kBoundaryIn}, {ChargeGraph::kBoundaryOut}, FlowOptions{true}).value;
  const bool fig_ok = std::abs(fig_flow - fig.expected_flow) <= 1e-12;

  r.pass = duality && lemma && fig_ok;
  r.detail = "200 graphs max |flow-cut| " + fmt(worst) + "; lemma instances " + std::to_string(accepted) + " of " +
             std::to_string(drawn) + " drawn, failures " + std::to_string(lemma_fail) + ", max |{a,b}-min| " +
             fmt(worst_gap) + ", max |d| " + fmt(worst_d) + "; example flow " + fmt(fig_flow, 6);
  return r;
}

inline CriterionResult total_decomposition(VerifyContext&) {
  CriterionResult r{5, "total decomposition", true, ""};
  oracle::Rng rng(5);
  const DomainPtr dom = build_domain(8, 1.0);
  const LatticeDomain& d = *dom;
  double worst_face = 0, worst_mass = 0, worst_cancel = 0;
  int bad_anchor = 0, errors = 0;
  for (int n = 0; n < 100; ++n) {
    const oracle::RandomField F = oracle::random_charge_field(dom, rng, 3, 2.0);
    try {
      const ChargeSet C = check_integer_fluxes(F.field);
      const PathDecomposition D = decompose(F.field, C);
      const FluxField R = recompose(D);
      for (FaceId f = 0; f < static_cast<FaceId>(d.num_faces()); ++f)
        worst_face = std::max(worst_face, std::abs(R[f] - F.field[f]));
      // No cancellation: per face, the path contributions sum in absolute value to |X_f|.
      std::vector<double> absum(d.num_faces(), 0.0);
      double carried = 0;
      for (const LatticePath& P : D.paths) {
        for (const Step& s : P.steps) absum[s.face] += P.weight;
        carried += P.weight * static_cast<double>(P.steps.size());
        for (const Anchor* a : {&P.start, &P.end}) {
          if (a->kind == Anchor::Kind::boundary_face) {
            bad_anchor += d.face(a->id).kind != FaceKind::boundary;
          } else {
            const int q = C.at(a->id);
            bad_anchor += (a == &P.start) ? !(q > 0) : !(q < 0);
          }
        }
      }
      for (const LatticeCycle& Cy : D.cycles) {
        for (const Step& s : Cy.steps) absum[s.face] += Cy.weight;
        carried += Cy.weight * static_cast<double>(Cy.steps.size());
      }
      for (FaceId f = 0; f < static_cast<FaceId>(d.num_faces()); ++f)
        worst_cancel = std::max(worst_cancel, std::abs(absum[f] - std::abs(F.field[f])));
      worst_mass = std::max(worst_mass, std::abs(carried - F.field.mass()) / std::max(1.0, F.field.mass()));
    } catch (const Error&) {
      ++errors;
    }
  }
  r.pass = errors == 0 && worst_face <= 1e-9 && worst_mass <= 1e-9 && worst_cancel <= 1e-9 && bad_anchor == 0;
  r.detail = "100 fields: max face error " + fmt(worst_face) + ", mass identity error " + fmt(worst_mass) +
             ", max cancellation " + fmt(worst_cancel) + ", bad anchors " + std::to_string(bad_anchor) +
             ", errors " + std::to_string(errors);
  return r;
}

inline CriterionResult monotonicity(VerifyContext& ctx) {
  CriterionResult r{6, "monotonicity", true, ""};
  const double p = 1.2;
  std::ostringstream os;
  {
    const DomainPtr d = build_domain(32, 1.0);
    const Vec3 x0 = d->center(default_initial_charges(*d, 1).begin()->first);
    const FluxField M = sample_monopole(d, x0);
    std::vector<double> radii;
    for (double rr = 0.2; rr <= 0.9 + 1e-9; rr += 0.05) radii.push_back(rr);
    const MonotonicityProfile prof = monotonicity_profile(M, x0, p, radii);
    double mean = 0;
    for (double t : prof.theta) mean += t;
    mean /= static_cast<double>(prof.theta.size());
    double spread = 0, rhs_rel = 0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
      spread = std::max(spread, std::abs(prof.theta[k] - mean) / mean);
      rhs_rel = std::max(rhs_rel, radii[k] * prof.rhs[k] / prof.theta[k]);
    }
    const double tol = quadrature_tolerance(32);
    const bool ok = spread <= 0.10 && rhs_rel <= tol;
    r.pass = r.pass && ok;
    os << "monopole N=32: max |theta-mean|/mean " << fmt(spread, 3) << ", max r*RHS/theta " << fmt(rhs_rel, 3)
       << "; ";
  }
  const auto& run = ctx.run("monopole");
  const FluxField& X = run.art.result.field;
  const LatticeDomain& d = X.domain();
  const double h = d.cell_size();
  double worst = 0;  // largest decrease beyond the allowance, relative
  int centers = 0;
  bool ok = true;
  for (const auto& [c, q] : run.art.result.charges) {
    const Vec3 x0 = d.center(c);
    std::vector<double> radii;
    for (double m = 2.5; m * h <= 0.95 * d.radius() - x0.norm(); m += 1.0) radii.push_back(m * h);
    if (radii.size() < 2) continue;
    ++centers;
    const MonotonicityProfile prof = monotonicity_profile(X, x0, p, radii);
    for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
      const double allow = 3.0 * std::max(prof.quad_error[k], prof.quad_error[k + 1]);
      const double drop = prof.theta[k] - prof.theta[k + 1];
      if (drop > allow) ok = false;
      worst = std::max(worst, (drop - allow) / prof.theta[k]);
    }
  }
  ok = ok && centers > 0;
  r.pass = r.pass && ok;
  os << "solver: " << centers << " charged centers, non-decreasing within 3x quadrature error: " << (ok ? "yes" : "no")
     << " (worst excess " << fmt(worst, 3) << ")";
  r.detail = os.str();
  return r;
}

inline CriterionResult interpolant_scaling(VerifyContext&) {
  CriterionResult r{7, "interpolant scaling", true, ""};
  const double p = 1.2, h = 1.0 / 40;
  const Vec3 v(0, 0, 0.06);
  auto layout = [&](double eps) {
    const int N = 2 * static_cast<int>(std::ceil((1 + eps + 3 * h) / h));
    return std::pair<int, double>{N, N * h / 2};
  };
  std::ostringstream os;
  // Neumann solves with the same inner data.
  std::map<double, double> wnorm;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto [N, L] = layout(eps);
    const DomainPtr sd = build_shell(N, L, 1.0, 1.0 + eps);
    const FluxField U = sample_uniform(sd, v);
    const std::vector<FaceId> inner = inner_boundary_faces(*sd);
    std::vector<double> g(inner.size());
    double gs = 0;
    for (std::size_t k = 0; k < inner.size(); ++k) gs += (g[k] = -sd->face(inner[k]).outward_sign() * U[inner[k]]);
    for (double& x : g) x -= gs / static_cast<double>(g.size());
    wnorm[eps] = std::pow(energy(neumann_interpolant(sd, g), p), 1.0 / p);
  }
  const double bound = std::pow(2.0, 1.0 / p) * 1.2;
  const double r1 = wnorm[0.1] / wnorm[0.2], r2 = wnorm[0.05] / wnorm[0.1];
  const bool neumann_ok = r1 <= bound && r2 <= bound;
  os << "Neumann norm ratios " << fmt(r1) << ", " << fmt(r2) << " (bound " << fmt(bound) << "); ";

  std::vector<double> Cs;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto [N, L] = layout(eps);
    const DomainPtr d = build_domain(N, L);
    const InterpolantResult ir = build_interpolant(sample_uniform(d, v), eps, p);
    Cs.push_back(ir.constant);
  }
  double mean = 0;
  for (double c : Cs) mean += c;
  mean /= 3;
  bool stable = std::isfinite(mean) && mean != 0;
  for (double c : Cs) stable = stable && std::isfinite(c) && std::abs(c - mean) <= 0.3 * std::abs(mean);
  os << "C(eps=0.2,0.1,0.05) = " << fmt(Cs[0]) << ", " << fmt(Cs[1]) << ", " << fmt(Cs[2])
     << (stable ? " (within 30% of mean)" : " (unstable)");
  r.pass = neumann_ok && stable;
  r.detail = os.str();
  return r;
}

inline CriterionResult tangent_maps(VerifyContext& ctx) {
  CriterionResult r{8, "tangent-map structure", true, ""};
  const double p = 1.2;
  std::ostringstream os;
  for (int N : {16, 32, 48}) {
    const DomainPtr d = build_domain(N, 1.0);
    const double h = d->cell_size();
    const Vec3 x0 = d->center(default_initial_charges(*d, 1).begin()->first);
    const FluxField M = sample_monopole(d, x0);
    const double lam = (std::floor((1 - x0.norm()) / h - 0.5 - 1e-9) + 0.5) * h;
    const FluxField Bm = blowup(M, x0, lam);
    const FluxField ref = sample_monopole(Bm.domain_ptr(), Vec3::Zero());
    double dif = 0, tot = 0;
    for (FaceId f = 0; f < static_cast<FaceId>(Bm.domain().num_faces()); ++f) {
      dif += std::abs(Bm[f] - ref[f]);
      tot += std::abs(ref[f]);
    }
    const double rad = radiality_defect(Bm, Vec3::Zero(), p) / radiality_reference(Bm, Vec3::Zero(), p);
    const double hom = homogeneity_defect(Bm);
    const double tol = quadrature_tolerance(N);
    const bool ok = dif / tot <= tol && rad <= tol && hom <= tol;
    r.pass = r.pass && ok;
    os << "monopole N=" << N << ": fixed-point diff " << fmt(dif / tot, 2) << ", radiality " << fmt(rad, 3)
       << ", homogeneity " << fmt(hom, 3) << " (tol " << tol << "); ";
  }
  // Solver blow-ups at the charge. Defects of X_λ over the unit ball are
  // evaluated through the change of variables on the original lattice.
  const auto& run = ctx.run("monopole");
  const FluxField& X = run.art.result.field;
  const LatticeDomain& d = X.domain();
  if (run.art.result.charges.empty()) {
    r.pass = false;
    r.detail = os.str() + "solver output has no charge";
    return r;
  }
  const Vec3 xc = d.center(run.art.result.charges.begin()->first);
  const FluxField M = sample_monopole(X.domain_ptr(), xc);
  std::vector<double> rad, hom, floor;
  for (double lam : {0.4, 0.2, 0.1}) {
    rad.push_back(radiality_defect(X, xc, p, lam));
    HomogeneityOptions ho;
    ho.center = xc;
    ho.r_min = 0.25 * lam;
    ho.r_max = 0.9 * lam;
    hom.push_back(homogeneity_defect(X, ho));
    floor.push_back(homogeneity_defect(M, ho));
  }
  bool rad_ok = true, hom_ok = true;
  for (int k = 0; k < 2; ++k) {
    rad_ok = rad_ok && rad[k + 1] <= rad[k] * (1 + 1e-12);
    hom_ok = hom_ok && hom[k + 1] <= hom[k] + floor[k + 1];
  }
  r.pass = r.pass && rad_ok && hom_ok;
  os << "solver lambda=0.4,0.2,0.1: radiality " << fmt(rad[0], 3) << ", " << fmt(rad[1], 3) << ", " << fmt(rad[2], 3)
     << (rad_ok ? " (non-increasing)" : " (increases)") << "; homogeneity " << fmt(hom[0], 3) << ", "
     << fmt(hom[1], 3) << ", " << fmt(hom[2], 3) << " with lattice floor " << fmt(floor[1], 3) << ", "
     << fmt(floor[2], 3) << (hom_ok ? " (non-increasing within floor)" : " (increases beyond floor)");
  r.detail = os.str();
  return r;
}

inline CriterionResult isolated_singularities(VerifyContext& ctx) {
  CriterionResult r{9, "isolated singularities", true, ""};
  const double p = 1.2, s = 3 - 2 * p;
  std::ostringstream os;
  for (const std::string& name : preset_names()) {
    const auto& run = ctx.run(name);
    const FluxField& X = run.art.result.field;
    const LatticeDomain& d = X.domain();
    const RegularityReport rep = regularity_scan(X, p);
    const auto clusters = cell_clusters(d, rep.flagged);
    int diam = 0;
    for (const auto& cl : clusters) diam = std::max(diam, cluster_diameter(d, cl));
    const auto rows = box_count(d, rep.flagged, s);
    bool decreasing = true;
    for (std::size_t k = 1; k + 1 < rows.size(); ++k)  // from δ = 2h up
      decreasing = decreasing && rows[k].premeasure <= rows[k + 1].premeasure * (1 + 1e-12);
    const int degree = std::abs(run.art.boundary.degree);
    const bool ok = static_cast<int>(clusters.size()) <= degree + 1 && diam <= 3 && decreasing;
    r.pass = r.pass && ok;
    os << name << ": " << clusters.size() << " clusters (max " << degree + 1 << "), diameter " << diam
       << ", box count " << (decreasing ? "decreasing" : "not decreasing") << "; ";
  }
  r.detail = os.str();
  r.detail.resize(r.detail.size() - 2);
  return r;
}

inline CriterionResult determinism(VerifyContext& ctx) {
  CriterionResult r{10, "determinism", true, ""};
  std::ostringstream os;
  for (const std::string& name : {std::string("monopole"), std::string("dipole-cap")}) {
    RunConfig cfg = preset_config(name);
    cfg.N = 16;
    ctx.note("repeating preset " + name + " at N = 16");
    const SolveArtifacts a = run_solve(cfg), b = run_solve(cfg);
    const bool same = a.field_text == b.field_text && a.charges_text == b.charges_text && a.history_csv == b.history_csv;
    r.pass = r.pass && same;
    os << name << " N=16: " << (same ? "byte-identical" : "differs") << " (" << a.field_text.size() << " bytes); ";
  }
  r.detail = os.str();
  r.detail.resize(r.detail.size() - 2);
  return r;
}

}  // namespace verify_detail

using CriterionFn = std::function<CriterionResult(VerifyContext&)>;

inline const std::map<int, CriterionFn>& criteria() {
  static const std::map<int, CriterionFn> all{
      {1, verify_detail::monopole_energy},     {2, verify_detail::epsilon_regularity},
      {3, verify_detail::charge_elimination},  {4, verify_detail::mincut_duality},
      {5, verify_detail::total_decomposition}, {6, verify_detail::monotonicity},
      {7, verify_detail::interpolant_scaling}, {8, verify_detail::tangent_maps},
      {9, verify_detail::isolated_singularities}, {10, verify_detail::determinism},
  };
  return all;
}

inline std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "decomposition") return {5};
  if (suite == "mincut") return {3, 4};
  if (suite == "interpolant") return {7};
  if (suite == "monopole") return {1, 6, 8};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  throw Error(Errc::invalid_argument,
              "unknown suite '" + suite + "' (expected decomposition, mincut, interpolant, monopole or all)");
}

inline std::string format_result(const CriterionResult& c) {
  return std::string(c.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(c.id) + " (" + c.name +
         "): " + c.detail;
}

// Runs a suite, printing one line per criterion to `out` as it completes.
inline std::vector<CriterionResult> run_suite(const std::string& suite, std::ostream& out,
                                              std::ostream* log = nullptr) {
  const std::vector<int> ids = suite_criteria(suite);
  VerifyContext ctx(log);
  std::vector<CriterionResult> res;
  for (int id : ids) {
    CriterionResult c;
    try {
      c = criteria().at(id)(ctx);
    } catch (const std::exception& e) {
      c.id = id;
      c.name = "criterion";
      c.pass = false;
      c.detail = std::string("error: ") + e.what();
    }
    out << format_result(c) << std::endl;
    res.push_back(std::move(c));
  }
  return res;
}

}  // namespace intflux

#endif  // INTFLUX_VERIFY_HPP
