#pragma once

#include <stdexcept>
#include <string>

namespace opca {

/// Why an input was rejected. Callers that need to tell failure modes apart
/// (checkpoint loading, PGM ingestion) switch on this instead of the message.
enum class InputErrorKind {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  not_symmetric,
  not_orthonormal,
  missing_path,
  malformed_header,
  mixed_dimensions,
  bad_magic,
  truncated,
  version_mismatch,
  io_failure,
};

const char* to_string(InputErrorKind kind) noexcept;

class InputError : public std::runtime_error {
 public:
  InputError(InputErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  InputErrorKind kind() const noexcept { return kind_; }

 private:
  InputErrorKind kind_;
};

/// Non-convergence, drift-bound violation or a non-finite loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration: unknown key, unparsable value, out-of-range setting.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void reject(const std::string& what) {
  throw InputError(InputErrorKind::invalid_argument, what);
}

[[noreturn]] inline void reject(InputErrorKind kind, const std::string& what) {
  throw InputError(kind, what);
}

}  // namespace opca
