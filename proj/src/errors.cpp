#include "apnet/errors.hpp"

namespace apnet {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidEdge: return "InvalidEdge";
    case ErrorKind::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::kAllZeroK: return "AllZeroK";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kDegenerateSites: return "DegenerateSites";
    case ErrorKind::kNonFiniteState: return "NonFiniteState";
    case ErrorKind::kInvalidSpectrum: return "InvalidSpectrum";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kSessionLimitReached: return "SessionLimitReached";
    case ErrorKind::kSessionNotFound: return "SessionNotFound";
    case ErrorKind::kSessionNotRunning: return "SessionNotRunning";
    case ErrorKind::kStaleSequence: return "StaleSequence";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace apnet
