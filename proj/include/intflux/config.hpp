#ifndef INTFLUX_CONFIG_HPP
#define INTFLUX_CONFIG_HPP

// Run configuration: `key = value` lines, `#` starts a comment.
//
//   N, R, p, boundary, charges_init, convex_tol, max_outer_iters, seed,
//   shell_eps, out_dir
//
// boundary is one of `zero`, `uniform-degree-<k>`, `dipole-cap[:<mass>]` or a
// path to a field file whose boundary trace is used. charges_init lists
// `i j k q` records separated by `;`.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "intflux/field_io.hpp"
#include "intflux/sampling.hpp"
#include "intflux/solver.hpp"

namespace intflux {

struct ChargeSpec {
  CellIndex cell;
  int charge = 0;
};

struct RunConfig {
  int N = 32;
  double R = 1.0;
  std::string boundary = "uniform-degree-1";
  std::optional<std::vector<ChargeSpec>> charges_init;
  std::string out_dir = ".";
  SolveConfig solve;
  std::filesystem::path base_dir = ".";  // relative boundary paths resolve here

  void validate() const {
    if (N < 4) throw Error(Errc::resolution_too_small, "N must be at least 4, got " + std::to_string(N));
    if (!(R > 0)) throw Error(Errc::invalid_argument, "R must be positive");
    solve.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void config_fail(std::size_t line, const std::string& msg) {
  throw Error(Errc::parse_error, "config line " + std::to_string(line) + ": " + msg);
}

template <class T>
T config_number(std::size_t line, const std::string& key, const std::string& v) {
  T out{};
  bool ok;
  if constexpr (std::is_same_v<T, std::uint64_t>) {
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    ok = ec == std::errc() && ptr == v.data() + v.size();
  } else {
    ok = parse_number(v, out);
  }
  if (!ok) config_fail(line, "bad value for " + key + ": '" + v + "'");
  return out;
}

inline std::vector<ChargeSpec> parse_charges(std::size_t line, const std::string& v) {
  std::vector<ChargeSpec> out;
  std::stringstream all(v);
  std::string rec;
  while (std::getline(all, rec, ';')) {
    rec = trim(rec);
    if (rec.empty()) continue;
    std::istringstream rs(rec);
    std::string t[4], extra;
    if (!(rs >> t[0] >> t[1] >> t[2] >> t[3]) || (rs >> extra)) config_fail(line, "charge record must be 'i j k q'");
    ChargeSpec c;
    if (!parse_number(t[0], c.cell.i) || !parse_number(t[1], c.cell.j) || !parse_number(t[2], c.cell.k) ||
        !parse_number(t[3], c.charge) || c.charge == 0)
      config_fail(line, "malformed charge record '" + rec + "'");
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  std::string raw;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::config_fail(lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq)), v = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) detail::config_fail(lineno, "duplicate key " + key);
    if (key == "N") cfg.N = detail::config_number<int>(lineno, key, v);
    else if (key == "R") cfg.R = detail::config_number<double>(lineno, key, v);
    else if (key == "p") cfg.solve.p = detail::config_number<double>(lineno, key, v);
    else if (key == "boundary") cfg.boundary = v;
    else if (key == "charges_init") cfg.charges_init = detail::parse_charges(lineno, v);
    else if (key == "convex_tol") cfg.solve.convex_tol = detail::config_number<double>(lineno, key, v);
    else if (key == "max_outer_iters") cfg.solve.max_outer_iters = detail::config_number<int>(lineno, key, v);
    else if (key == "seed") cfg.solve.seed = detail::config_number<std::uint64_t>(lineno, key, v);
    else if (key == "shell_eps") cfg.solve.shell_eps = detail::config_number<double>(lineno, key, v);
    else if (key == "out_dir") cfg.out_dir = v;
    else detail::config_fail(lineno, "unknown key " + key);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::parse_error, "cannot open config " + path);
  RunConfig cfg = parse_config(is);
  cfg.base_dir = std::filesystem::path(path).parent_path();
  return cfg;
}

// Antipodal caps: outward flux m/2 spread evenly over the boundary faces with
// z > R/2 and -m/2 over those with z < -R/2. Degree zero, mass m.
inline BoundaryData dipole_cap_boundary(const DomainPtr& d, double m) {
  if (!(m >= 0)) throw Error(Errc::invalid_argument, "dipole-cap mass must be nonnegative");
  const double R = d->radius();
  std::size_t top = 0, bottom = 0;
  for (FaceId f : d->boundary_faces()) {
    const double z = d->face_center(f)[2];
    top += z > R / 2;
    bottom += z < -R / 2;
  }
  if (top == 0 || bottom == 0) throw Error(Errc::resolution_too_small, "dipole caps contain no boundary faces");
  std::vector<double> out;
  for (FaceId f : d->boundary_faces()) {
    const double z = d->face_center(f)[2];
    out.push_back(z > R / 2 ? 0.5 * m / top : (z < -R / 2 ? -0.5 * m / bottom : 0.0));
  }
  return make_boundary_data(std::move(out));
}

inline BoundaryData resolve_boundary(const RunConfig& cfg, const DomainPtr& d) {
  const std::string& b = cfg.boundary;
  if (b == "zero") return make_boundary_data(std::vector<double>(d->boundary_faces().size(), 0.0));
  const std::string ud = "uniform-degree-";
  if (b.rfind(ud, 0) == 0) {
    int k;
    if (!detail::parse_number(b.substr(ud.size()), k)) throw Error(Errc::parse_error, "bad boundary preset " + b);
    return uniform_degree_boundary(d, k);
  }
  if (b == "dipole-cap") return dipole_cap_boundary(d, 0.2);
  if (b.rfind("dipole-cap:", 0) == 0) {
    double m;
    if (!detail::parse_number(b.substr(11), m)) throw Error(Errc::parse_error, "bad dipole-cap mass in " + b);
    return dipole_cap_boundary(d, m);
  }
  std::filesystem::path path(b);
  if (path.is_relative()) path = cfg.base_dir / path;
  const FluxField X = read_field_file(path.string());
  const DomainSpec& s = X.domain().spec();
  if (s.N != d->resolution() || s.outer_radius != d->radius() || s.inner_radius != 0)
    throw Error(Errc::shape_mismatch, "boundary field domain does not match N and R");
  return boundary_trace(X);
}

inline ChargeSet resolve_charges(const std::vector<ChargeSpec>& specs, const LatticeDomain& d) {
  ChargeSet C;
  for (const ChargeSpec& s : specs) {
    const CellId c = d.cell_id(s.cell);
    if (c == kNone)
      throw Error(Errc::invalid_argument, "initial charge at (" + std::to_string(s.cell.i) + " " +
                                              std::to_string(s.cell.j) + " " + std::to_string(s.cell.k) +
                                              ") is not a domain cell");
    C.add(c, s.charge);
  }
  return C;
}

// Bundled presets, identical to the files under presets/.
inline std::string preset_text(const std::string& name) {
  if (name == "monopole") return "# Degree-1 uniform boundary data.\nN = 32\nR = 1\np = 1.2\nboundary = uniform-degree-1\nseed = 1\nout_dir = out/monopole\n";
  if (name == "dipole-cap") return "# Degree-0 caps of total mass 0.2.\nN = 32\nR = 1\np = 1.2\nboundary = dipole-cap:0.2\nseed = 1\nout_dir = out/dipole-cap\n";
  if (name == "zero") return "# Zero boundary data.\nN = 16\nR = 1\np = 1.2\nboundary = zero\nseed = 1\nout_dir = out/zero\n";
  throw Error(Errc::invalid_argument, "unknown preset " + name);
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"monopole", "dipole-cap", "zero"};
  return names;
}

inline RunConfig preset_config(const std::string& name) {
  std::istringstream is(preset_text(name));
  return parse_config(is);
}

}  // namespace intflux

#endif  // INTFLUX_CONFIG_HPP
