#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bsl {

enum class ErrorKind {
  InvalidArgument,
  DomainTooSmall,
  DomainMismatch,
  Unnormalized,
  UnsupportedRepresentation,
  NonFinite,
  UnboundedConstant,
  MissingConstant,
  ZeroEvidence,
  DegenerateVariance,
  AllWeightsZero,
  VacuousBound,
  MissingD,
  IOFailure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::Unnormalized: return "Unnormalized";
    case ErrorKind::UnsupportedRepresentation: return "UnsupportedRepresentation";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::UnboundedConstant: return "UnboundedConstant";
    case ErrorKind::MissingConstant: return "MissingConstant";
    case ErrorKind::ZeroEvidence: return "ZeroEvidence";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::AllWeightsZero: return "AllWeightsZero";
    case ErrorKind::VacuousBound: return "VacuousBound";
    case ErrorKind::MissingD: return "MissingD";
    case ErrorKind::IOFailure: return "IOFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so
/// front ends can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// ZeroEvidence, NonFinite and friends: the numbers broke, not the input.
  bool numerical() const noexcept {
    switch (kind_) {
      case ErrorKind::ZeroEvidence:
      case ErrorKind::NonFinite:
      case ErrorKind::AllWeightsZero:
      case ErrorKind::UnboundedConstant:
      case ErrorKind::DomainTooSmall:
      case ErrorKind::DegenerateVariance:
      case ErrorKind::VacuousBound:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const char* what) {
  if (!condition) fail(kind, what);
}

}  // namespace bsl
