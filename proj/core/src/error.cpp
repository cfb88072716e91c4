#include "sdlt/error.hpp"

namespace sdlt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GenesisMismatch: return "GenesisMismatch";
    case ErrorCode::InvalidGenesis: return "InvalidGenesis";
    case ErrorCode::InvalidEvidence: return "InvalidEvidence";
    case ErrorCode::EvidenceKindMismatch: return "EvidenceKindMismatch";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::QuorumUnavailable: return "QuorumUnavailable";
    case ErrorCode::EmptyNetwork: return "EmptyNetwork";
    case ErrorCode::InvalidShare: return "InvalidShare";
    case ErrorCode::InsufficientStake: return "InsufficientStake";
    case ErrorCode::NegativeBalance: return "NegativeBalance";
    case ErrorCode::InvalidTransfer: return "InvalidTransfer";
    case ErrorCode::AlignmentError: return "AlignmentError";
    case ErrorCode::SignatureForgery: return "SignatureForgery";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::NotInDomain: return "NotInDomain";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::NotBaGenesis: return "NotBaGenesis";
    case ErrorCode::InvalidConfiguration: return "InvalidConfiguration";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::string format(ErrorCode code, const std::string& what) {
  return std::string(to_string(code)) + ": " + what;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(format(code, what)), code_(code), message_(what) {}

Error::Error(ErrorCode code, const std::string& what, std::uint64_t step)
    : std::runtime_error(format(code, "step " + std::to_string(step) + ": " + what)),
      code_(code),
      step_(step),
      message_(what) {}

Error Error::at_step(std::uint64_t step) const {
  if (step_) return *this;
  return Error(code_, message_, step);
}

}  // namespace sdlt
