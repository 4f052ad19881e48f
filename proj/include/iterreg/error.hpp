#pragma once

#include <stdexcept>
#include <string>

namespace iterreg {

/// Categories reported across the C boundary. Values are stable; the C API
/// maps them one-to-one onto iterreg_status.
enum class ErrorKind {
  ContractViolation = 1,
  NumericalFailure = 2,
  CertificationFailure = 3,
  CertificateInvalid = 4,
  AssumptionViolated = 5,
  RuleInapplicable = 6,
  BoundViolation = 7,
  Io = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define ITERREG_DEFINE_ERROR(Name, Kind)                               \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

ITERREG_DEFINE_ERROR(ContractViolation, ContractViolation)
ITERREG_DEFINE_ERROR(NumericalFailure, NumericalFailure)
ITERREG_DEFINE_ERROR(CertificationFailure, CertificationFailure)
ITERREG_DEFINE_ERROR(CertificateInvalid, CertificateInvalid)
ITERREG_DEFINE_ERROR(AssumptionViolated, AssumptionViolated)
ITERREG_DEFINE_ERROR(RuleInapplicable, RuleInapplicable)
ITERREG_DEFINE_ERROR(BoundViolation, BoundViolation)
ITERREG_DEFINE_ERROR(IoError, Io)

#undef ITERREG_DEFINE_ERROR

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace iterreg
