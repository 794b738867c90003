#pragma once
#include <stdexcept>
#include <string>

namespace cda {

// Base for every domain error raised by the toolkit. Callers that only care
// about "bad data vs. bug" catch this; tests match the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CDA_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

CDA_DEFINE_ERROR(UnknownTrader);
CDA_DEFINE_ERROR(TraderRetired);
CDA_DEFINE_ERROR(NonCrossing);
CDA_DEFINE_ERROR(InfeasibleRange);
CDA_DEFINE_ERROR(EmptySide);
CDA_DEFINE_ERROR(NoRealizedPrice);
CDA_DEFINE_ERROR(MissingInput);
CDA_DEFINE_ERROR(InsufficientMarkets);
CDA_DEFINE_ERROR(InsufficientClusters);
CDA_DEFINE_ERROR(SchemaError);
CDA_DEFINE_ERROR(IntegrityError);
CDA_DEFINE_ERROR(ConfigError);
CDA_DEFINE_ERROR(MissingArtifact);

#undef CDA_DEFINE_ERROR

}  // namespace cda
