#include "salmoe/error.hpp"

namespace salmoe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::singular_design: return "singular-design";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::empty_component: return "empty-component";
    case ErrorCode::degenerate_partition: return "degenerate-partition";
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::unknown_scenario: return "unknown-scenario";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::too_many_failures: return "too-many-failures";
    case ErrorCode::file_not_found: return "file-not-found";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::missing_column: return "missing-column";
    case ErrorCode::invalid_argument: return "invalid-argument";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace salmoe
