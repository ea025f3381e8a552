#pragma once

#include <stdexcept>
#include <string>

namespace liesde {

// Base for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures of the numerics themselves (CLI maps these to exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

#define LIESDE_DEFINE_ERROR(Name, Base) \
  class Name : public Base {            \
   public:                              \
    using Base::Base;                   \
  };

LIESDE_DEFINE_ERROR(DimensionMismatch, Error)
LIESDE_DEFINE_ERROR(SingularMatrix, NumericalError)
LIESDE_DEFINE_ERROR(DomainError, NumericalError)
LIESDE_DEFINE_ERROR(NonFiniteState, NumericalError)
LIESDE_DEFINE_ERROR(NotSkew, Error)
LIESDE_DEFINE_ERROR(Unsupported, Error)
LIESDE_DEFINE_ERROR(InvalidInertia, Error)
LIESDE_DEFINE_ERROR(InvalidInitial, Error)
LIESDE_DEFINE_ERROR(IndivisibleSteps, Error)
LIESDE_DEFINE_ERROR(ZeroStepSize, Error)
LIESDE_DEFINE_ERROR(IncompatibleGrids, Error)
LIESDE_DEFINE_ERROR(InsufficientPoints, Error)
LIESDE_DEFINE_ERROR(MalformedCsv, Error)
LIESDE_DEFINE_ERROR(TooFewSamples, Error)
LIESDE_DEFINE_ERROR(ConfigError, Error)

#undef LIESDE_DEFINE_ERROR

}  // namespace liesde
