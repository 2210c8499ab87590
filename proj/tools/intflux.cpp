// Command-line front end: solve, analyze, decompose, verify.
//
// Exit codes: 0 success, 1 usage or data error, 2 non-convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "intflux.hpp"
#include "intflux/verify.hpp"

namespace {

using intflux::Error;
using intflux::Vec3;
using json = nlohmann::json;

constexpr int kOk = 0, kDataError = 1, kNoConvergence = 2;

json cell_json(const intflux::LatticeDomain& d, intflux::CellId c) {
  const intflux::CellIndex& x = d.cells()[c];
  return json::array({x.i, x.j, x.k});
}

json charges_json(const intflux::LatticeDomain& d, const intflux::ChargeSet& C) {
  json out = json::array();
  for (const auto& [c, q] : C) {
    json j = cell_json(d, c);
    j.push_back(q);
    out.push_back(j);
  }
  return out;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v;
    if (!intflux::detail::parse_number(intflux::detail::trim(tok), v))
      throw Error(intflux::Errc::parse_error, std::string("bad number in ") + what + ": '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

Vec3 parse_center(const std::string& s) {
  if (s.empty()) return Vec3::Zero();
  const std::vector<double> v = parse_list(s, "--center");
  if (v.size() != 3) throw Error(intflux::Errc::parse_error, "--center expects x,y,z");
  return {v[0], v[1], v[2]};
}

// Writes to the named file, or stdout when the name is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  intflux::write_text_file(path, text);
}

int cmd_solve(const std::string& cfg_path) {
  const intflux::RunConfig cfg = intflux::read_config_file(cfg_path);
  const intflux::SolveArtifacts a = intflux::run_solve(cfg);
  intflux::write_artifacts(a, cfg.out_dir);
  json rep;
  rep["energy"] = a.result.energy;
  rep["residual"] = a.result.residual;
  rep["converged"] = a.result.converged;
  rep["outer_iterations"] = a.result.history.empty() ? 0 : a.result.history.back().iteration;
  rep["charges"] = charges_json(*a.domain, a.result.charges);
  rep["degree"] = a.boundary.degree;
  rep["out_dir"] = cfg.out_dir;
  std::cout << rep.dump(2) << '\n';
  if (!a.result.converged) {
    std::cerr << "outer loop stopped at max_outer_iters = " << cfg.solve.max_outer_iters << " while still improving\n";
    return kNoConvergence;
  }
  return kOk;
}

struct AnalyzeArgs {
  std::string field, mode = "scan", center, radii, out;
  double p = 1.2, lambda = 0.5, s = 0, threshold = 0;
};

int cmd_analyze(const AnalyzeArgs& A) {
  const intflux::FluxField X = intflux::read_field_file(A.field);
  const intflux::LatticeDomain& d = X.domain();
  intflux::check_exponent(A.p);
  const Vec3 x0 = parse_center(A.center);
  std::vector<double> radii = A.radii.empty() ? std::vector<double>{} : parse_list(A.radii, "--radii");
  std::ostringstream os;

  if (A.mode == "scan") {
    const intflux::RegularityReport rep = intflux::regularity_scan(X, A.p, radii, A.threshold);
    json j;
    j["energy"] = intflux::energy(X, A.p);
    j["eps_p"] = rep.eps_p;
    j["radii"] = rep.radii;
    j["charges"] = charges_json(d, intflux::check_integer_fluxes(X));
    json flagged = json::array();
    for (intflux::CellId c : rep.flagged) flagged.push_back(cell_json(d, c));
    j["flagged"] = flagged;
    j["untested"] = rep.untested.size();
    json clusters = json::array();
    for (const auto& cl : intflux::cell_clusters(d, rep.flagged))
      clusters.push_back({{"cells", cl.size()}, {"diameter", intflux::cluster_diameter(d, cl)}});
    j["clusters"] = clusters;
    os << j.dump(2) << '\n';
  } else if (A.mode == "monotonicity") {
    if (radii.empty()) {
      const double rmax = 0.9 * d.radius() - x0.norm();
      for (double r = 0.2 * d.radius(); r <= rmax + 1e-12; r += 0.05 * d.radius()) radii.push_back(r);
    }
    const intflux::MonotonicityProfile M = intflux::monotonicity_profile(X, x0, A.p, radii);
    os << "r,theta,rhs,dtheta,quad_error\n";
    for (std::size_t k = 0; k < M.radii.size(); ++k)
      os << intflux::format_double(M.radii[k]) << ',' << intflux::format_double(M.theta[k]) << ','
         << intflux::format_double(M.rhs[k]) << ',' << intflux::format_double(M.dtheta[k]) << ','
         << intflux::format_double(M.quad_error[k]) << '\n';
  } else if (A.mode == "blowup") {
    const intflux::FluxField B = intflux::blowup(X, x0, A.lambda);
    if (!A.out.empty()) intflux::write_field_file(A.out, B);
    json j;
    j["lambda"] = A.lambda;
    j["resolution"] = B.domain().resolution();
    j["energy_unit_ball"] = intflux::ball_energy(B, Vec3::Zero(), 1.0, A.p);
    j["rescaled_energy"] = intflux::rescaled_energy(X, x0, A.lambda, A.p);
    j["radiality_defect"] = intflux::radiality_defect(B, Vec3::Zero(), A.p);
    j["radiality_reference"] = intflux::radiality_reference(B, Vec3::Zero(), A.p);
    j["homogeneity_defect"] = intflux::homogeneity_defect(B);
    std::cout << j.dump(2) << '\n';
    return kOk;
  } else if (A.mode == "boxcount") {
    const intflux::RegularityReport rep = intflux::regularity_scan(X, A.p, radii, A.threshold);
    const double s = A.s > 0 ? A.s : 3 - 2 * A.p;
    os << "delta,count,premeasure\n";
    for (const intflux::BoxCountRow& row : intflux::box_count(d, rep.flagged, s))
      os << intflux::format_double(row.delta) << ',' << row.count << ',' << intflux::format_double(row.premeasure)
         << '\n';
  } else {
    throw Error(intflux::Errc::invalid_argument,
                "unknown mode '" + A.mode + "' (expected scan, monotonicity, blowup or boxcount)");
  }
  emit(A.out, os.str());
  return kOk;
}

int cmd_decompose(const std::string& field, const std::string& out, const std::string& dot) {
  const intflux::FluxField X = intflux::read_field_file(field);
  const intflux::ChargeSet C = intflux::check_integer_fluxes(X);
  const intflux::PathDecomposition D = intflux::decompose(X, C);
  if (!out.empty()) {
    std::ostringstream os;
    intflux::write_decomposition(os, D);
    intflux::write_text_file(out, os.str());
  }
  const intflux::ChargeGraph G = intflux::build_graph(D, intflux::boundary_trace(X));
  if (!dot.empty()) {
    std::ostringstream os;
    intflux::write_dot(os, G, &X.domain());
    intflux::write_text_file(dot, os.str());
  }
  json j;
  j["paths"] = D.paths.size();
  j["cycles"] = D.cycles.size();
  j["charges"] = charges_json(X.domain(), C);
  j["mass"] = X.mass();
  j["residual_mass"] = D.residual.mass();
  j["graph_edges"] = G.edges.size();
  j["kirchhoff_defect"] = intflux::kirchhoff_defect(G);
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_verify(const std::string& suite) {
  const auto results = intflux::run_suite(suite, std::cout, &std::cerr);
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? kOk : kDataError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integer-flux vector field minimizer and analysis tools"};
  app.require_subcommand(1);

  std::string cfg_path;
  auto* solve = app.add_subcommand("solve", "minimize the energy for a run configuration");
  solve->add_option("config", cfg_path, "configuration file")->required();

  AnalyzeArgs A;
  auto* analyze = app.add_subcommand("analyze", "analysis reports for a field file");
  analyze->add_option("field", A.field, "field file")->required();
  analyze->add_option("--mode", A.mode, "scan | monotonicity | blowup | boxcount")->capture_default_str();
  analyze->add_option("--p", A.p, "exponent in ]1, 3/2[")->capture_default_str();
  analyze->add_option("--center", A.center, "center x,y,z (default origin)");
  analyze->add_option("--radii", A.radii, "comma-separated radii");
  analyze->add_option("--lambda", A.lambda, "blow-up scale")->capture_default_str();
  analyze->add_option("--s", A.s, "box-counting exponent (default 3 - 2p)");
  analyze->add_option("--threshold", A.threshold, "scan threshold (default eps_p)");
  analyze->add_option("--out", A.out, "output file (blowup: the rescaled field)");

  std::string dec_field, dec_out, dec_dot;
  auto* decomp = app.add_subcommand("decompose", "path/cycle decomposition of a field file");
  decomp->add_option("field", dec_field, "field file")->required();
  decomp->add_option("--out", dec_out, "write the decomposition here");
  decomp->add_option("--dot", dec_dot, "write the charge graph as DOT here");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run an acceptance suite");
  verify->add_option("suite", suite, "decomposition | mincut | interpolant | monopole | all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kDataError;
  }

  try {
    if (*solve) return cmd_solve(cfg_path);
    if (*analyze) return cmd_analyze(A);
    if (*decomp) return cmd_decompose(dec_field, dec_out, dec_dot);
    if (*verify) return cmd_verify(suite);
  } catch (const intflux::NoConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == intflux::Errc::no_convergence ? kNoConvergence : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kDataError;
}
