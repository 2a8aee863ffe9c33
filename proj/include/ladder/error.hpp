#pragma once

#include <stdexcept>
#include <string>

namespace ladder {

enum class ErrorCode {
  invalid_argument,
  no_known_tokens,
  missing_fine_score,
  non_monotone_thresholds,
  partition_mismatch,
  empty_level,
  zero_vector,
  degenerate_input,
  invalid_spec,
  manifest_error,
  shape_mismatch,
  non_finite_value,
  io_error,
  config_error,
  non_finite_loss,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C layer can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ladder
