#ifndef INTFLUX_RUN_HPP
#define INTFLUX_RUN_HPP

// A configured minimization run and its text artifacts.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "intflux/config.hpp"
#include "intflux/field_io.hpp"
#include "intflux/solver.hpp"

namespace intflux {

struct SolveArtifacts {
  DomainPtr domain;
  BoundaryData boundary;
  MinimizeResult result;
  std::string field_text;
  std::string charges_text;  // one `i j k q` line per charge, in cell order
  std::string history_csv;   // iter,move,energy
};

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string charges_text(const LatticeDomain& d, const ChargeSet& C) {
  std::ostringstream os;
  for (const auto& [c, q] : C) {
    const CellIndex& x = d.cells()[c];
    os << x.i << ' ' << x.j << ' ' << x.k << ' ' << q << '\n';
  }
  return os.str();
}

inline SolveArtifacts run_solve(const RunConfig& cfg) {
  cfg.validate();
  SolveArtifacts a;
  a.domain = build_domain(cfg.N, cfg.R);
  a.boundary = resolve_boundary(cfg, a.domain);
  std::optional<ChargeSet> init;
  if (cfg.charges_init) init = resolve_charges(*cfg.charges_init, *a.domain);
  a.result = minimize(a.domain, a.boundary, cfg.solve, init);
  std::ostringstream fs;
  write_field_text(fs, a.result.field);
  a.field_text = fs.str();
  a.charges_text = charges_text(*a.domain, a.result.charges);
  std::ostringstream hs;
  hs << "iter,move,energy\n";
  for (const HistoryEntry& h : a.result.history)
    hs << h.iteration << ',' << csv_quote(h.move) << ',' << format_double(h.energy) << '\n';
  a.history_csv = hs.str();
  return a;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!(os << text)) throw Error(Errc::invalid_argument, "cannot write " + path.string());
}

// Writes field.txt, charges.txt and history.csv into dir.
inline void write_artifacts(const SolveArtifacts& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "field.txt", a.field_text);
  write_text_file(dir / "charges.txt", a.charges_text);
  write_text_file(dir / "history.csv", a.history_csv);
}

}  // namespace intflux

#endif  // INTFLUX_RUN_HPP
