#pragma once

#include <stdexcept>
#include <string>

namespace blm {

// Failure categories surfaced by the library. CLI exit codes are derived
// from these: config/usage errors map to 4, provider errors to 3,
// validation failures to 2.
enum class ErrorCode {
  SyntaxError,
  UnknownSymbol,
  IncompleteLexicon,
  EmptyRuleSet,
  ConflictingOperators,
  DomainExceeded,
  EConflict,
  UnsupportedOperator,
  LengthExceeded,
  MissingEntry,
  AmbiguousSurface,
  NotPerturbable,
  DuplicateSurface,
  NoConsistentHypothesis,
  NoMatchingOption,
  ProviderUnavailable,
  MalformedProviderResponse,
  NoAcceptableCandidates,
  SchemaError,
  VerificationFailed,
  ConfigError,
};

const char* error_code_name(ErrorCode code);

class BlmError : public std::runtime_error {
 public:
  BlmError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::IncompleteLexicon: return "IncompleteLexicon";
    case ErrorCode::EmptyRuleSet: return "EmptyRuleSet";
    case ErrorCode::ConflictingOperators: return "ConflictingOperators";
    case ErrorCode::DomainExceeded: return "DomainExceeded";
    case ErrorCode::EConflict: return "EConflict";
    case ErrorCode::UnsupportedOperator: return "UnsupportedOperator";
    case ErrorCode::LengthExceeded: return "LengthExceeded";
    case ErrorCode::MissingEntry: return "MissingEntry";
    case ErrorCode::AmbiguousSurface: return "AmbiguousSurface";
    case ErrorCode::NotPerturbable: return "NotPerturbable";
    case ErrorCode::DuplicateSurface: return "DuplicateSurface";
    case ErrorCode::NoConsistentHypothesis: return "NoConsistentHypothesis";
    case ErrorCode::NoMatchingOption: return "NoMatchingOption";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::MalformedProviderResponse: return "MalformedProviderResponse";
    case ErrorCode::NoAcceptableCandidates: return "NoAcceptableCandidates";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace blm
