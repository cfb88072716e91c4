#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdlt {

enum class ErrorCode {
  GenesisMismatch,
  InvalidGenesis,
  InvalidEvidence,
  EvidenceKindMismatch,
  Malformed,
  QuorumUnavailable,
  EmptyNetwork,
  InvalidShare,
  InsufficientStake,
  NegativeBalance,
  InvalidTransfer,
  AlignmentError,
  SignatureForgery,
  PoolExhausted,
  NotInDomain,
  InvalidArgument,
  InvalidScenario,
  NotBaGenesis,
  InvalidConfiguration,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above. Errors
/// raised while executing a scenario additionally record the step index.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  Error(ErrorCode code, const std::string& what, std::uint64_t step);

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::uint64_t>& step() const noexcept { return step_; }

  Error at_step(std::uint64_t step) const;

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> step_;
  std::string message_;
};

}  // namespace sdlt
