#ifndef IQNET_ERROR_HPP
#define IQNET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace iqnet {

enum class ErrorCode {
  MissingCenter,
  AsymmetricKernel,
  NegativeWeight,
  InvalidDomain,
  InvalidWindow,
  ShapeMismatch,
  StateSpaceTooLarge,
  NoConvergence,
  InsufficientData,
  TailTooShort,
  OffsetTooLarge,
  Unstable,
  COutOfRange,
  DomainTooSmall,
  ParseError,
  ValidationError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingCenter: return "MissingCenter";
    case ErrorCode::AsymmetricKernel: return "AsymmetricKernel";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::TailTooShort: return "TailTooShort";
    case ErrorCode::OffsetTooLarge: return "OffsetTooLarge";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::COutOfRange: return "COutOfRange";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace iqnet

#endif  // IQNET_ERROR_HPP
