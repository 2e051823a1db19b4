#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ruinkit {

enum class ErrorCode {
  InvalidInput,
  InvalidRegime,
  NonConverged,
  Stiffness,
  InsufficientRange,
  NonMonotoneGrid,
};

std::string_view to_string(ErrorCode code);

// Exceptions carry a machine-readable code; the message always starts with it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ruinkit
