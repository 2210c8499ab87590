#ifndef INTFLUX_ERROR_HPP
#define INTFLUX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace intflux {

enum class Errc {
  resolution_too_small,
  exponent_out_of_range,
  non_integral_divergence,
  non_integral_degree,
  inconsistent_charges,
  anchor_mismatch,
  unknown_edge,
  factor_out_of_range,
  empty_terminal_set,
  hypothesis_violated,
  shape_mismatch,
  infeasible_charges,
  no_convergence,
  incompatible_data,
  ball_outside_domain,
  support_violation,
  scale_out_of_domain,
  parse_error,
  invalid_argument,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::resolution_too_small: return "resolution-too-small";
    case Errc::exponent_out_of_range: return "exponent-out-of-range";
    case Errc::non_integral_divergence: return "non-integral-divergence";
    case Errc::non_integral_degree: return "non-integral-degree";
    case Errc::inconsistent_charges: return "inconsistent-charges";
    case Errc::anchor_mismatch: return "anchor-mismatch";
    case Errc::unknown_edge: return "unknown-edge";
    case Errc::factor_out_of_range: return "factor-out-of-range";
    case Errc::empty_terminal_set: return "empty-terminal-set";
    case Errc::hypothesis_violated: return "hypothesis-violated";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::infeasible_charges: return "infeasible-charges";
    case Errc::no_convergence: return "no-convergence";
    case Errc::incompatible_data: return "incompatible-data";
    case Errc::ball_outside_domain: return "ball-outside-domain";
    case Errc::support_violation: return "support-violation";
    case Errc::scale_out_of_domain: return "scale-out-of-domain";
    case Errc::parse_error: return "parse-error";
    case Errc::invalid_argument: return "invalid-argument";
  }
  return "unknown";
}

// All library failures are reported through this type; code() identifies the
// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class NonIntegralDivergence : public Error {
 public:
  NonIntegralDivergence(int cell, double deviation, const std::string& what)
      : Error(Errc::non_integral_divergence, what), cell_(cell), deviation_(deviation) {}
  int cell() const noexcept { return cell_; }
  double deviation() const noexcept { return deviation_; }

 private:
  int cell_;
  double deviation_;
};

}  // namespace intflux

#endif  // INTFLUX_ERROR_HPP
