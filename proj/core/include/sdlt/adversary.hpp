#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "sdlt/consensus.hpp"
#include "sdlt/ledger.hpp"
#include "sdlt/rng.hpp"

namespace sdlt {

/// Bijective relabeling m of node ids. Honest ids map to fresh adversary
/// ids; adversary-owned ids are fixed points.
class MirrorMap {
 public:
  MirrorMap() = default;
  /// Throws InvalidArgument unless the pairs are injective.
  explicit MirrorMap(std::map<NodeId, NodeId> pairs);

  /// m(u); throws NotInDomain for ids outside the domain.
  const NodeId& at(const NodeId& node) const;
  /// m(u) inside the domain, u outside it.
  NodeId relabel(const NodeId& node) const;
  bool contains(const NodeId& node) const { return pairs_.contains(node); }

  MirrorMap inverse() const;
  const std::map<NodeId, NodeId>& pairs() const { return pairs_; }

 private:
  std::map<NodeId, NodeId> pairs_;
};

/// Both executions of the long-range attack plus the joining node's view.
struct AttackTrace {
  std::vector<LedgerState> honest_states;     // S_0 .. S_t
  std::vector<LedgerState> adversary_states;  // S'_0 .. S'_t
  std::vector<LocalStateBag> merged_bags;     // 𝕊_0 .. 𝕊_t
};

/// The label private_mine() uses for adversary blocks unless told otherwise.
NodeId default_adversary_id();

/// A block mined by the adversary on its private branch. The adversary picks
/// the block content, so it uses the all-zero payload digest, which sorts
/// first under the resolver's byte tie-break.
AppendRecord withheld_block(const NodeId& producer);

/// Rejects any claim carrying an honest signature (BA signer, PoW producer,
/// PoS signer or transfer sender) on a record that is not at the same height
/// of `honest_history` with an identical prefix. Throws SignatureForgery.
void audit_signatures(const LedgerState& claim, const LedgerState& honest_history,
                      const std::set<NodeId>& honest);

/// `base` extended by `extra_records` records signed only by `byzantine`;
/// `salt` separates otherwise identical forgeries.
LedgerState forge_ba_state(const LedgerState& base, const std::set<NodeId>& byzantine,
                           std::size_t extra_records, std::uint64_t salt);

/// Honest committee members claim `truth`, Byzantine members claim `forgery`.
LocalStateBag fabricate_ba_bag(const LedgerState& truth, const std::vector<NodeId>& committee,
                               const std::set<NodeId>& byzantine, const LedgerState& forgery);

/// Per-node variant: every Byzantine member claims its entry in `forgeries`.
LocalStateBag fabricate_ba_bag(const LedgerState& truth, const std::vector<NodeId>& committee,
                               const std::set<NodeId>& byzantine,
                               const std::map<NodeId, LedgerState>& forgeries);

/// Block race from truncate(anchor, fork_depth) against the honest chain at
/// `anchor`: each of at most `horizon` blocks goes to the adversary with
/// probability `q_share`. Returns the adversary branch as soon as the PoW
/// resolver would pick it over the honest chain (at least equal work, and the
/// adversary's zero-digest blocks win the tie-break), i.e. when the deficit
/// reaches zero. fork_depth 0 succeeds immediately with `anchor` itself.
std::optional<LedgerState> private_mine(const LedgerState& anchor, std::size_t fork_depth, double q_share,
                                        std::size_t horizon, SeededRng& rng,
                                        const NodeId& adversary = default_adversary_id());

/// Sorted honest ids are sent to `pool` in order; Byzantine ids are fixed.
/// Throws PoolExhausted if the pool is too small and InvalidArgument if it
/// overlaps the roster.
MirrorMap mirror_network(std::span<const NodeProfile> roster, std::span<const NodeId> pool);

/// Relabels every id inside evidence (signers, producers, transfers). The
/// genesis is shared between worlds and left untouched.
LedgerState relabel(const LedgerState& state, const MirrorMap& map);
EventBatch relabel(const EventBatch& batch, const MirrorMap& map);

/// Runs σ_PoS on the honest roster and on the roster relabeled through `map`
/// with the same events, for `t` steps. The bag at step τ holds each honest
/// id claiming S_τ and its mirror claiming S'_τ; adversary-owned fixed points
/// would have to claim one world, so they stay silent.
///
/// Genesis stakeholders must be adversary-owned (fixed points): both worlds
/// share the genesis, so its holders sign in both. Throws InvalidScenario
/// otherwise.
AttackTrace long_range_attack(const GenesisDescriptor& genesis, std::span<const EventBatch> events,
                              std::span<const NodeProfile> roster, const MirrorMap& map, std::size_t t);

/// σ_PoS over `events[0..t)`, coalitions from the events or, when absent, all
/// positive-balance holders. Returns S_0 .. S_t.
std::vector<LedgerState> run_pos(const LedgerState& genesis_state, std::span<const EventBatch> events,
                                 std::size_t t);

}  // namespace sdlt
