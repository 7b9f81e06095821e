#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace autoten {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (COO or CSV); carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// An index lies outside the declared tensor dimensions.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Shapes of operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a precondition on values (negative counts, rank 0, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A factor matrix is numerically rank deficient.
class SingularityError : public Error {
 public:
  SingularityError(int mode, const std::string& what)
      : Error(what), mode_(mode) {}
  /// 0-based mode of the offending factor.
  int mode() const noexcept { return mode_; }

 private:
  int mode_;
};

}  // namespace autoten
