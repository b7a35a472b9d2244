#pragma once

#include <stdexcept>
#include <string>

namespace ftdn {

enum class ErrorKind {
  InvalidArgument,
  Io,
  Parse,
  DimensionMismatch,
  Degenerate,
  Numeric,
  Internal,
};

// Library-wide exception. `kind` maps 1:1 onto the C API status codes;
// `what()` carries a short diagnostic ("DegenerateLandmarks: ...").
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace ftdn
