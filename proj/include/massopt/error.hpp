#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace massopt {

enum class ErrorCode {
  invalid_cost,
  numeric_overflow,
  non_monotone_quotient,
  outside_domain,
  atom_outside_grid,
  inadmissible_source,
  regime_mismatch,
  unsupported_grid,
  schedule_too_short,
  unbounded,
  unknown_fixture,
  too_large,
  parse_error,
  evaluation_error,
  config_error,
  io_error,
  invalid_measure,
  not_converged,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace massopt
