#include "blowuplab/errors.hpp"

namespace blowuplab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_resolution: return "invalid-resolution";
    case ErrorKind::domain: return "domain";
    case ErrorKind::invalid_field: return "invalid-field";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::inapplicable: return "inapplicable";
    case ErrorKind::inequality_violation: return "inequality-violation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::fit: return "fit";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace blowuplab
