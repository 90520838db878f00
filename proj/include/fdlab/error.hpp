#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fdlab {

enum class ErrorKind {
  Dimension,
  Shape,
  EmptyMask,
  Domain,
  DegenerateFlow,
  Format,
  Data,
  Spec,
  Index,
  Length,
  Divergence,
  EmptyEval,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind lets callers (and the CLI's
/// exit-code mapping) distinguish validation problems without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fdlab
