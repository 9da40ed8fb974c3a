#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace salmoe {

enum class ErrorCode {
  invalid_parameter,
  dimension_mismatch,
  singular_design,
  singular_system,
  empty_component,
  degenerate_partition,
  invalid_spec,
  unknown_scenario,
  length_mismatch,
  too_many_failures,
  file_not_found,
  parse_error,
  missing_column,
  invalid_argument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` lets callers branch
/// (restart drivers swallow empty_component, the CLI maps codes to exit status).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace salmoe
