#pragma once

#include <stdexcept>
#include <string>

namespace vmbd {

/// Base class for all library errors. what() is prefixed with the error name
/// so callers (and the CLI) can identify the failure without RTTI.
class Error : public std::runtime_error {
public:
  Error(const std::string& name, const std::string& message)
      : std::runtime_error(name + ": " + message), name_(name) {}

  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

#define VMBD_DEFINE_ERROR(ErrorName)                    \
  class ErrorName : public Error {                      \
  public:                                               \
    explicit ErrorName(const std::string& message)      \
        : Error(#ErrorName, message) {}                 \
  }

VMBD_DEFINE_ERROR(NonFiniteEvaluation);
VMBD_DEFINE_ERROR(SingularMass);
VMBD_DEFINE_ERROR(NoIgnorableCoordinates);
VMBD_DEFINE_ERROR(SingularAugmentedMatrix);
VMBD_DEFINE_ERROR(SingularReducedMass);
VMBD_DEFINE_ERROR(SingularKKT);
VMBD_DEFINE_ERROR(SingularProjection);
VMBD_DEFINE_ERROR(InconsistentInitialState);
VMBD_DEFINE_ERROR(StepSizeUnderflow);
VMBD_DEFINE_ERROR(EmptySeries);
VMBD_DEFINE_ERROR(GimbalProximity);

#undef VMBD_DEFINE_ERROR

}  // namespace vmbd
