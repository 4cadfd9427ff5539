#pragma once

#include <stdexcept>
#include <string>

namespace prpca {

// Base of every error raised by the library. Subclasses name the failure
// category so callers (and the CLI) can react per kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PRPCA_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

PRPCA_DEFINE_ERROR(DimensionError)
PRPCA_DEFINE_ERROR(ArgumentError)
PRPCA_DEFINE_ERROR(NumericError)
PRPCA_DEFINE_ERROR(DomainError)
PRPCA_DEFINE_ERROR(RankError)
PRPCA_DEFINE_ERROR(DivergenceError)
PRPCA_DEFINE_ERROR(InsufficientDataError)
PRPCA_DEFINE_ERROR(DegenerateConfigurationError)
PRPCA_DEFINE_ERROR(RegistrationFailure)
PRPCA_DEFINE_ERROR(InsufficientFeaturesError)
PRPCA_DEFINE_ERROR(CanvasTooLargeError)
PRPCA_DEFINE_ERROR(ConfigurationError)
PRPCA_DEFINE_ERROR(IngestionError)
PRPCA_DEFINE_ERROR(UndefinedMetricError)

#undef PRPCA_DEFINE_ERROR

}  // namespace prpca
