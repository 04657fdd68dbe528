#pragma once

#include <stdexcept>
#include <string>

namespace scmlens {

/// Base of every error raised by the library. The kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  enum class Kind { Io, Format, Validation, Numerical };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Kind::Io, what) {}
};

/// Bytes or text do not follow the exchange format.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(Kind::Format, what) {}
};

/// Well-formed input that violates a contract (shapes, ranges, references).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(Kind::Validation, what) {}
};

/// A solver could not produce a usable answer.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(Kind::Numerical, what) {}
};

/// Rethrows `e` as the same error class with `context` prepended.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string what = context + ": " + e.what();
  switch (e.kind()) {
    case Error::Kind::Io: throw IoError(what);
    case Error::Kind::Format: throw FormatError(what);
    case Error::Kind::Validation: throw ValidationError(what);
    case Error::Kind::Numerical: throw NumericalError(what);
  }
  throw Error(e.kind(), what);
}

}  // namespace scmlens
