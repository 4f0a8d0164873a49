#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phyto {

enum class ErrorCode {
  MalformedRow,
  NonMonotoneTimestamp,
  EmptyFile,
  TooSparse,
  DegenerateSeries,
  MissingValue,
  TooFewMinoritySamples,
  SingularCovariance,
  NonFiniteInput,
  DimensionMismatch,
  NoValidCandidate,
  ClassTooSmall,
  LengthMismatch,
  SingleClassInput,
  NoDays,
  InvalidArgument,
  ConfigError,
  PathError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace phyto
