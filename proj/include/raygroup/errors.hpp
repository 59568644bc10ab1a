#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace raygroup {

enum class ErrorKind {
  kParse,
  kValidation,
  kInvalidParameter,
  kIo,
  kShapeMismatch,
  kMissingTerm,
  kNonFiniteTerm,
  kEmptyEvaluation,
  kGenerationFailure,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error the library throws. The kind survives re-wrapping,
/// so callers (the CLI in particular) can map errors to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define RAYGROUP_DEFINE_ERROR(Name, Kind)                               \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  };

RAYGROUP_DEFINE_ERROR(ParseError, ErrorKind::kParse)
RAYGROUP_DEFINE_ERROR(ValidationError, ErrorKind::kValidation)
RAYGROUP_DEFINE_ERROR(InvalidParameter, ErrorKind::kInvalidParameter)
RAYGROUP_DEFINE_ERROR(IoError, ErrorKind::kIo)
RAYGROUP_DEFINE_ERROR(ShapeMismatch, ErrorKind::kShapeMismatch)
RAYGROUP_DEFINE_ERROR(MissingTerm, ErrorKind::kMissingTerm)
RAYGROUP_DEFINE_ERROR(NonFiniteTerm, ErrorKind::kNonFiniteTerm)
RAYGROUP_DEFINE_ERROR(EmptyEvaluation, ErrorKind::kEmptyEvaluation)
RAYGROUP_DEFINE_ERROR(GenerationFailure, ErrorKind::kGenerationFailure)

#undef RAYGROUP_DEFINE_ERROR

/// Throws the concrete error class that matches `kind`.
[[noreturn]] void throw_error(ErrorKind kind, const std::string& message);

}  // namespace raygroup
