#include "phyto/error.hpp"

namespace phyto {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::TooSparse: return "TooSparse";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::TooFewMinoritySamples: return "TooFewMinoritySamples";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoValidCandidate: return "NoValidCandidate";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::NoDays: return "NoDays";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::PathError: return "PathError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace phyto
