#pragma once

#include <exception>
#include <string>
#include <utility>

namespace distgp {

// Coarse classification used by the CLI to pick an exit code.
enum class ErrorClass { data, numerical };

class Error : public std::exception {
 public:
  explicit Error(std::string message) : message_(std::move(message)) {}

  const char* what() const noexcept override { return message_.c_str(); }

  virtual const char* kind() const noexcept { return "Error"; }
  virtual ErrorClass error_class() const noexcept { return ErrorClass::data; }

  // Prefixes context (e.g. an index pair) while keeping the dynamic type, so
  // callers can `catch (Error& e) { e.add_context(...); throw; }`.
  void add_context(const std::string& context) {
    message_ = context + ": " + message_;
  }

 private:
  std::string message_;
};

#define DISTGP_DEFINE_ERROR(Name, Class)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    using Error::Error;                                                   \
    const char* kind() const noexcept override { return #Name; }          \
    ErrorClass error_class() const noexcept override { return Class; }    \
  };

DISTGP_DEFINE_ERROR(WeightError, ErrorClass::data)
DISTGP_DEFINE_ERROR(DimensionError, ErrorClass::data)
DISTGP_DEFINE_ERROR(CovarianceError, ErrorClass::data)
DISTGP_DEFINE_ERROR(DomainError, ErrorClass::data)
DISTGP_DEFINE_ERROR(ParameterError, ErrorClass::data)
DISTGP_DEFINE_ERROR(CardinalityError, ErrorClass::data)
DISTGP_DEFINE_ERROR(SizeError, ErrorClass::data)
DISTGP_DEFINE_ERROR(UnsupportedPairError, ErrorClass::data)
DISTGP_DEFINE_ERROR(ConsistencyError, ErrorClass::data)
DISTGP_DEFINE_ERROR(FormatError, ErrorClass::data)
DISTGP_DEFINE_ERROR(IoError, ErrorClass::data)
DISTGP_DEFINE_ERROR(QuadratureError, ErrorClass::numerical)
DISTGP_DEFINE_ERROR(NotPositiveDefiniteError, ErrorClass::numerical)
DISTGP_DEFINE_ERROR(NegativeVarianceError, ErrorClass::numerical)
DISTGP_DEFINE_ERROR(OptimizationError, ErrorClass::numerical)
DISTGP_DEFINE_ERROR(InternalError, ErrorClass::numerical)

#undef DISTGP_DEFINE_ERROR

}  // namespace distgp
