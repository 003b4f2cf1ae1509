#include "secfield/error.hpp"

namespace secfield {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Config: return "config";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::SingularJacobian: return "singular-jacobian";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Io: return "io";
    case ErrorKind::FormatVersion: return "format-version";
  }
  return "unknown";
}

}  // namespace secfield
