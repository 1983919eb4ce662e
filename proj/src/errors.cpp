#include "opca/errors.hpp"

namespace opca {

const char* to_string(InputErrorKind kind) noexcept {
  switch (kind) {
    case InputErrorKind::invalid_argument: return "invalid_argument";
    case InputErrorKind::dimension_mismatch: return "dimension_mismatch";
    case InputErrorKind::non_finite: return "non_finite";
    case InputErrorKind::not_symmetric: return "not_symmetric";
    case InputErrorKind::not_orthonormal: return "not_orthonormal";
    case InputErrorKind::missing_path: return "missing_path";
    case InputErrorKind::malformed_header: return "malformed_header";
    case InputErrorKind::mixed_dimensions: return "mixed_dimensions";
    case InputErrorKind::bad_magic: return "bad_magic";
    case InputErrorKind::truncated: return "truncated";
    case InputErrorKind::version_mismatch: return "version_mismatch";
    case InputErrorKind::io_failure: return "io_failure";
  }
  return "unknown";
}

}  // namespace opca
