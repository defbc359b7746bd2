#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vgmt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or matrix shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Token id or element index outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN / Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the byte offset (binary files) or the
/// 1-based line number (text files) where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t location = 0)
      : Error(what), location_(location) {}
  std::uint64_t location() const { return location_; }

 private:
  std::uint64_t location_;
};

/// Invalid command line or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace vgmt
