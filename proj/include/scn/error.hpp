#pragma once

#include <stdexcept>
#include <string>

namespace scn {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor shapes do not conform (matmul/conv/loss operand mismatch).
struct DimensionError : Error {
  using Error::Error;
};

/// A configuration value is invalid (non-integral conv output, bad counts, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// An API contract was violated (backward on a consumed tape, non-scalar loss, ...).
struct UsageError : Error {
  using Error::Error;
};

/// External data could not be read or parsed (files, manifests, proposals).
struct DataError : Error {
  using Error::Error;
};

/// Checkpoint/feature-file envelope: header declares an unknown format version.
struct VersionError : DataError {
  using DataError::DataError;
};

/// Checkpoint/feature-file envelope: payload shorter than the directory claims.
struct TruncatedError : DataError {
  using DataError::DataError;
};

/// Checkpoint/feature-file envelope: trailing CRC-64 does not match.
struct ChecksumError : DataError {
  using DataError::DataError;
};

/// Numerical failure (divergence during training, non-finite values).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace scn
