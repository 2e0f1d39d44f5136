#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace apnet {

enum class ErrorKind {
  kInvalidEdge,
  kDisconnectedGraph,
  kAllZeroK,
  kDimensionMismatch,
  kDegenerateSites,
  kNonFiniteState,
  kInvalidSpectrum,
  kInvalidConfig,
  kIoError,
  kSessionLimitReached,
  kSessionNotFound,
  kSessionNotRunning,
  kStaleSequence,
};

std::string_view to_string(ErrorKind kind);

/// Every failure the library reports carries one of the kinds above so
/// callers (CLI exit codes, HTTP status mapping, bindings) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace apnet
