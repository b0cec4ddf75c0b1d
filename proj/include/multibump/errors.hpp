#pragma once

#include <stdexcept>
#include <string>

namespace multibump {

/// Broad failure classes; the CLI maps each one to its exit code.
enum class ErrorClass {
  input,        // malformed or precondition-violating input
  certification,
  convergence,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), cls_(cls), name_(std::move(name)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorClass cls_;
  std::string name_;
};

#define MULTIBUMP_DEFINE_ERROR(Type, cls)                                  \
  class Type : public Error {                                              \
   public:                                                                 \
    explicit Type(const std::string& what) : Error(cls, #Type, what) {}    \
  };

MULTIBUMP_DEFINE_ERROR(InputError, ErrorClass::input)
MULTIBUMP_DEFINE_ERROR(SignStructureViolation, ErrorClass::input)
MULTIBUMP_DEFINE_ERROR(EdgeMassViolation, ErrorClass::input)
MULTIBUMP_DEFINE_ERROR(IndexOutOfWindow, ErrorClass::input)
MULTIBUMP_DEFINE_ERROR(ScopeError, ErrorClass::input)
MULTIBUMP_DEFINE_ERROR(InsufficientSweep, ErrorClass::input)
MULTIBUMP_DEFINE_ERROR(DegenerateDirection, ErrorClass::convergence)
MULTIBUMP_DEFINE_ERROR(NoAdmissibleZeta, ErrorClass::convergence)
MULTIBUMP_DEFINE_ERROR(NonConvergence, ErrorClass::convergence)
MULTIBUMP_DEFINE_ERROR(ContinuationBreakdown, ErrorClass::convergence)
MULTIBUMP_DEFINE_ERROR(ScheduleExhausted, ErrorClass::certification)
MULTIBUMP_DEFINE_ERROR(InteriorityFailure, ErrorClass::certification)
MULTIBUMP_DEFINE_ERROR(SingularLinearization, ErrorClass::convergence)
MULTIBUMP_DEFINE_ERROR(BlowUp, ErrorClass::convergence)
MULTIBUMP_DEFINE_ERROR(NewtonFailure, ErrorClass::convergence)

#undef MULTIBUMP_DEFINE_ERROR

}  // namespace multibump
