#ifndef MODALRAY_ERRORS_HPP
#define MODALRAY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace modalray {

/// Failure classes; the numeric value doubles as the CLI exit code.
enum class ErrorClass { config = 2, spectral = 3, integration = 4, post_processing = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), cls_(cls), kind_(std::move(kind)) {}

  ErrorClass error_class() const { return cls_; }
  const std::string& kind() const { return kind_; }

 private:
  ErrorClass cls_;
  std::string kind_;
};

#define MODALRAY_DEFINE_ERROR(Name, Class)                                  \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(Class, #Name, what) {}   \
  }

MODALRAY_DEFINE_ERROR(ParseError, ErrorClass::config);
MODALRAY_DEFINE_ERROR(ValidationError, ErrorClass::config);

MODALRAY_DEFINE_ERROR(NonPositiveDepth, ErrorClass::spectral);
MODALRAY_DEFINE_ERROR(NegativeDepthCoordinate, ErrorClass::spectral);
MODALRAY_DEFINE_ERROR(ModeBelowCutoff, ErrorClass::spectral);
MODALRAY_DEFINE_ERROR(RootBracketFailure, ErrorClass::spectral);

MODALRAY_DEFINE_ERROR(DegenerateClock, ErrorClass::integration);
MODALRAY_DEFINE_ERROR(SourceError, ErrorClass::integration);

MODALRAY_DEFINE_ERROR(RankDeficient, ErrorClass::post_processing);
MODALRAY_DEFINE_ERROR(CausticCrossing, ErrorClass::post_processing);

#undef MODALRAY_DEFINE_ERROR

}  // namespace modalray

#endif
