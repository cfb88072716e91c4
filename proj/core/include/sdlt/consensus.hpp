#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sdlt/ledger.hpp"
#include "sdlt/rng.hpp"

namespace sdlt {

/// A roster member: identity, honesty, PoW power share and the steps at which
/// it is online (an empty schedule means always online).
struct NodeProfile {
  NodeId id;
  bool honest = true;
  double power = 0.0;
  std::set<std::uint64_t> online_schedule;

  bool online_at(std::uint64_t step) const {
    return online_schedule.empty() || online_schedule.contains(step);
  }
};

/// E_t. `transfers` and `coalition` are only meaningful for PoS; an absent
/// coalition means "every holder with positive balance signs".
struct EventBatch {
  std::uint64_t time = 0;
  std::string payload;
  std::vector<Transfer> transfers;
  std::optional<std::vector<NodeId>> coalition;

  /// SHA-256 over the little-endian time and the payload bytes.
  Digest digest() const;
};

class StakeLedger {
 public:
  StakeLedger() = default;
  explicit StakeLedger(StakeMap balances);

  const StakeMap& balances() const { return balances_; }
  TokenAmount balance(const NodeId& node) const;
  TokenAmount total() const { return total_; }

  /// Applies transfers in order; throws NegativeBalance if any would
  /// overdraw its sender. Supply is conserved.
  StakeLedger apply(std::span<const Transfer> transfers) const;

  friend bool operator==(const StakeLedger&, const StakeLedger&) = default;

 private:
  StakeMap balances_;
  TokenAmount total_ = 0;
};

/// σ_BA: the honest committee members agree on `e` and sign the append.
/// Throws QuorumUnavailable unless 2 * |byzantine ∩ committee| < |committee|.
LedgerState step_ba(const LedgerState& s, const std::vector<NodeId>& committee,
                    const std::set<NodeId>& byzantine, const EventBatch& e);

/// Samples a producer with probability equal to its power share. Powers of
/// `online` must sum to 1 (within 1e-9).
const NodeProfile& sample_producer(std::span<const NodeProfile> online, SeededRng& rng);

/// σ_PoW: one block of unit work by a power-proportional producer.
LedgerState step_pow(const LedgerState& s, std::span<const NodeProfile> online, const EventBatch& e,
                     SeededRng& rng);

/// PoW(S): total work; 0 for the genesis-only state.
std::uint64_t pow_total(const LedgerState& s);

/// Heaviest-chain order used by the PoW resolver: more work wins, equal work
/// is broken by the smaller canonical encoding. True iff `a` strictly beats `b`.
bool pow_prefers(const LedgerState& a, const LedgerState& b);

/// σ_PoS: `coalition` must hold strictly more than half of the supply in
/// `stake`. The record lists each signer's pre-append stake and the batch's
/// transfers, which must be valid against `stake`.
LedgerState step_pos(const LedgerState& s, const StakeLedger& stake, const std::set<NodeId>& coalition,
                     const EventBatch& e);

/// Balances after replaying `events` (one per record) from the genesis stake.
StakeLedger replay_stake(const LedgerState& s, std::span<const EventBatch> events);

/// Balances after replaying the transfers recorded in the state itself.
StakeLedger replay_stake(const LedgerState& s);

}  // namespace sdlt
