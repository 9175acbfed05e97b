#pragma once

#include <stdexcept>
#include <string>

namespace evver {

/// Base of every exception thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value outside the domain an operation accepts (bad label code, unknown
/// DCS category, out-of-range encoded score).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data: bad file headers, shape mismatches,
/// misaligned predictions.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Transient failure; the caller may retry (HTTP 404/429/5xx, network down).
class RetryableError : public Error {
 public:
  RetryableError(std::string what, long status = 0)
      : Error(std::move(what)), status_(status) {}
  long status() const noexcept { return status_; }

 private:
  long status_;
};

/// Training diverged (NaN/Inf loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace evver
