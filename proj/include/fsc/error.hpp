#pragma once

#include <stdexcept>
#include <string>

namespace fsc {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  ZeroBasisVector,
  NonFiniteObjective,
  FormatError,
  MissingData,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// Base of every exception thrown by the library. The C API maps `code()` onto
// its status enum; the CLI maps it onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ZeroBasisVector : public Error {
 public:
  explicit ZeroBasisVector(std::size_t row)
      : Error(ErrorCode::ZeroBasisVector,
              "basis vector " + std::to_string(row) + " vanished after warping"),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::DimensionMismatch, what);
}

}  // namespace fsc
