#include "massopt/error.hpp"

namespace massopt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_cost: return "InvalidCost";
    case ErrorCode::numeric_overflow: return "NumericOverflow";
    case ErrorCode::non_monotone_quotient: return "NonMonotoneQuotient";
    case ErrorCode::outside_domain: return "OutsideDomain";
    case ErrorCode::atom_outside_grid: return "AtomOutsideGrid";
    case ErrorCode::inadmissible_source: return "InadmissibleSource";
    case ErrorCode::regime_mismatch: return "RegimeMismatch";
    case ErrorCode::unsupported_grid: return "UnsupportedGrid";
    case ErrorCode::schedule_too_short: return "ScheduleTooShort";
    case ErrorCode::unbounded: return "Unbounded";
    case ErrorCode::unknown_fixture: return "UnknownFixture";
    case ErrorCode::too_large: return "TooLarge";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::evaluation_error: return "EvaluationError";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::invalid_measure: return "InvalidMeasure";
    case ErrorCode::not_converged: return "NotConverged";
  }
  return "Error";
}

} // namespace massopt
