#pragma once

#include <stdexcept>
#include <string>

namespace bnar {

/// Error categories. The numeric values double as CLI exit codes and
/// C API status codes.
enum class ErrorKind : int {
  kConfig = 2,
  kData = 3,
  kBlowUp = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

/// Subtypes of malformed or inconsistent data, mostly raised by the dataset
/// reader.
enum class DataFault {
  kGeneric,
  kCorruptHeader,
  kUnsupportedVersion,
  kDimensionMismatch,
  kTruncatedPayload,
  kNonFinite,
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what,
                     DataFault fault = DataFault::kGeneric)
      : Error(ErrorKind::kData, what), fault_(fault) {}

  DataFault fault() const noexcept { return fault_; }

 private:
  DataFault fault_;
};

/// A numerical integration left the finite / bounded regime.
class IntegrationError : public Error {
 public:
  explicit IntegrationError(const std::string& what)
      : Error(ErrorKind::kBlowUp, what) {}
};

}  // namespace bnar
