#ifndef INTFLUX_FIELD_IO_HPP
#define INTFLUX_FIELD_IO_HPP

// Field files.
//
// Text: a header line `fluxfield v1 N R` (shell domains append
// `shell r_in L`), then one line `axis i j k flux` per classified face, flux
// printed with 17 significant digits so that reading is bit-exact.
//
// Binary: 16-byte magic "INTFLUX-FIELD\0v1", then int32 N, double R,
// double r_in, double L, uint64 count and `count` records of
// (int32 axis, int32 i, int32 j, int32 k, double flux), little endian.

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "intflux/lattice.hpp"

namespace intflux {

inline constexpr std::array<char, 16> kBinaryMagic = {'I', 'N', 'T', 'F', 'L', 'U', 'X', '-',
                                                      'F', 'I', 'E', 'L', 'D', '\0', 'v', '1'};

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline void write_field_text(std::ostream& os, const FluxField& X) {
  const LatticeDomain& d = X.domain();
  os << "fluxfield v1 " << d.resolution() << ' ' << format_double(d.radius());
  if (d.is_shell() || d.half_width() != d.radius())
    os << " shell " << format_double(d.inner_radius()) << ' ' << format_double(d.half_width());
  os << '\n';
  for (FaceId f = 0; f < static_cast<FaceId>(d.num_faces()); ++f) {
    const Face& fc = d.face(f);
    os << fc.axis << ' ' << fc.pos.i << ' ' << fc.pos.j << ' ' << fc.pos.k << ' ' << format_double(X[f]) << '\n';
  }
}

namespace detail {
[[noreturn]] inline void parse_fail(std::size_t line, const std::string& msg) {
  throw Error(Errc::parse_error, "line " + std::to_string(line) + ": " + msg);
}

inline bool parse_number(const std::string& tok, double& v) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && ptr == e;
}
inline bool parse_number(const std::string& tok, int& v) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && ptr == e;
}
}  // namespace detail

inline FluxField read_field_text(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) detail::parse_fail(lineno, "missing header");
  std::istringstream hs(line);
  std::string magic, version, ntok, rtok, kw, rin_tok, l_tok;
  hs >> magic >> version >> ntok >> rtok;
  if (magic != "fluxfield" || version != "v1") detail::parse_fail(lineno, "expected 'fluxfield v1 N R'");
  DomainSpec spec;
  if (!detail::parse_number(ntok, spec.N) || !detail::parse_number(rtok, spec.outer_radius))
    detail::parse_fail(lineno, "bad N or R in header");
  spec.half_width = spec.outer_radius;
  if (hs >> kw) {
    if (kw != "shell" || !(hs >> rin_tok >> l_tok) || !detail::parse_number(rin_tok, spec.inner_radius) ||
        !detail::parse_number(l_tok, spec.half_width))
      detail::parse_fail(lineno, "bad shell suffix in header");
  }
  DomainPtr d;
  try {
    d = LatticeDomain::build(spec);
  } catch (const Error& e) {
    detail::parse_fail(lineno, e.what());
  }
  FluxField X(d);
  std::vector<char> seen(d->num_faces(), 0);
  std::size_t count = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string t[5], extra;
    if (!(ls >> t[0] >> t[1] >> t[2] >> t[3] >> t[4]) || (ls >> extra))
      detail::parse_fail(lineno, "expected 'axis i j k flux'");
    int axis, i, j, k;
    double v;
    if (!detail::parse_number(t[0], axis) || !detail::parse_number(t[1], i) || !detail::parse_number(t[2], j) ||
        !detail::parse_number(t[3], k) || !detail::parse_number(t[4], v) || axis < 0 || axis > 2)
      detail::parse_fail(lineno, "malformed record");
    if (!std::isfinite(v)) detail::parse_fail(lineno, "non-finite flux");
    const FaceId f = d->face_id(axis, {i, j, k});
    if (f == kNone) detail::parse_fail(lineno, "face is not classified in this domain");
    if (seen[f]) detail::parse_fail(lineno, "duplicate face");
    seen[f] = 1;
    X[f] = v;
    ++count;
  }
  if (count != d->num_faces())
    detail::parse_fail(lineno, "expected " + std::to_string(d->num_faces()) + " face records, found " +
                                   std::to_string(count));
  return X;
}

namespace detail {
template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is, std::size_t& offset) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw Error(Errc::parse_error, "byte " + std::to_string(offset) + ": truncated binary field");
  offset += sizeof(T);
  return v;
}
}  // namespace detail

inline void write_field_binary(std::ostream& os, const FluxField& X) {
  const LatticeDomain& d = X.domain();
  os.write(kBinaryMagic.data(), kBinaryMagic.size());
  detail::put<std::int32_t>(os, d.resolution());
  detail::put<double>(os, d.radius());
  detail::put<double>(os, d.inner_radius());
  detail::put<double>(os, d.half_width());
  detail::put<std::uint64_t>(os, d.num_faces());
  for (FaceId f = 0; f < static_cast<FaceId>(d.num_faces()); ++f) {
    const Face& fc = d.face(f);
    detail::put<std::int32_t>(os, fc.axis);
    detail::put<std::int32_t>(os, fc.pos.i);
    detail::put<std::int32_t>(os, fc.pos.j);
    detail::put<std::int32_t>(os, fc.pos.k);
    detail::put<double>(os, X[f]);
  }
}

inline FluxField read_field_binary(std::istream& is) {
  std::array<char, 16> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kBinaryMagic)
    throw Error(Errc::parse_error, "byte 0: bad binary field magic");
  std::size_t off = 16;
  DomainSpec spec;
  spec.N = detail::get<std::int32_t>(is, off);
  spec.outer_radius = detail::get<double>(is, off);
  spec.inner_radius = detail::get<double>(is, off);
  spec.half_width = detail::get<double>(is, off);
  const auto count = detail::get<std::uint64_t>(is, off);
  DomainPtr d = LatticeDomain::build(spec);
  if (count != d->num_faces()) throw Error(Errc::parse_error, "binary face count does not match the domain");
  FluxField X(d);
  std::vector<char> seen(d->num_faces(), 0);
  for (std::uint64_t n = 0; n < count; ++n) {
    const std::size_t rec = off;
    const int axis = detail::get<std::int32_t>(is, off);
    CellIndex pos;
    pos.i = detail::get<std::int32_t>(is, off);
    pos.j = detail::get<std::int32_t>(is, off);
    pos.k = detail::get<std::int32_t>(is, off);
    const double v = detail::get<double>(is, off);
    const FaceId f = (axis >= 0 && axis < 3) ? d->face_id(axis, pos) : kNone;
    if (f == kNone || seen[f])
      throw Error(Errc::parse_error, "byte " + std::to_string(rec) + ": bad or duplicate face record");
    seen[f] = 1;
    X[f] = v;
  }
  return X;
}

// Reads either format, detected by the magic bytes.
inline FluxField read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::parse_error, "cannot open '" + path + "'");
  std::array<char, 16> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 16 && head == kBinaryMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_field_binary(in) : read_field_text(in);
}

inline void write_field_file(const std::string& path, const FluxField& X, bool binary = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::parse_error, "cannot write '" + path + "'");
  if (binary)
    write_field_binary(out, X);
  else
    write_field_text(out, X);
}

}  // namespace intflux

#endif  // INTFLUX_FIELD_IO_HPP
