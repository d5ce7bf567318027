#pragma once

#include <stdexcept>
#include <string>

namespace blowuplab {

enum class ErrorKind {
  invalid_resolution,
  domain,
  invalid_field,
  convergence,
  precondition,
  inapplicable,
  inequality_violation,
  parse,
  fit,
  io,
};

const char* to_string(ErrorKind kind);

// Single exception type; callers branch on kind() (the CLI maps kinds to exit codes).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace blowuplab
