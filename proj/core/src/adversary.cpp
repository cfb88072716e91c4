#include "sdlt/adversary.hpp"

#include <algorithm>

#include "sdlt/error.hpp"

namespace sdlt {

MirrorMap::MirrorMap(std::map<NodeId, NodeId> pairs) : pairs_(std::move(pairs)) {
  std::set<NodeId> images;
  for (const auto& [from, to] : pairs_) {
    if (!images.insert(to).second) {
      throw Error(ErrorCode::InvalidArgument, "mirror map sends two ids to " + to.to_string());
    }
  }
}

const NodeId& MirrorMap::at(const NodeId& node) const {
  auto it = pairs_.find(node);
  if (it == pairs_.end()) throw Error(ErrorCode::NotInDomain, node.to_string() + " is not in the mirror map");
  return it->second;
}

NodeId MirrorMap::relabel(const NodeId& node) const {
  auto it = pairs_.find(node);
  return it == pairs_.end() ? node : it->second;
}

MirrorMap MirrorMap::inverse() const {
  std::map<NodeId, NodeId> inv;
  for (const auto& [from, to] : pairs_) inv.emplace(to, from);
  return MirrorMap(std::move(inv));
}

NodeId default_adversary_id() { return NodeId::from_label("adversary"); }

AppendRecord withheld_block(const NodeId& producer) {
  return AppendRecord(Digest::zero(), PowEvidence{1, producer});
}

namespace {

bool carries_honest_signature(const AppendRecord& record, const std::set<NodeId>& honest) {
  return std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, BaEvidence>) {
          return std::any_of(e.signers.begin(), e.signers.end(),
                             [&](const NodeId& id) { return honest.contains(id); });
        } else if constexpr (std::is_same_v<T, PowEvidence>) {
          return honest.contains(e.producer);
        } else {
          return std::any_of(e.signers.begin(), e.signers.end(),
                             [&](const StakeSignature& s) { return honest.contains(s.signer); }) ||
                 std::any_of(e.transfers.begin(), e.transfers.end(),
                             [&](const Transfer& t) { return honest.contains(t.from); });
        }
      },
      record.evidence());
}

}  // namespace

void audit_signatures(const LedgerState& claim, const LedgerState& honest_history,
                      const std::set<NodeId>& honest) {
  if (!claim.same_genesis(honest_history)) {
    throw Error(ErrorCode::GenesisMismatch, "claim and honest history have different genesis");
  }
  const auto records = claim.record_view();
  const auto history = honest_history.record_view();
  // Records inside the shared prefix are honest-made.
  std::size_t shared = 0;
  while (shared < records.size() && shared < history.size() && *records[shared] == *history[shared]) ++shared;
  for (std::size_t i = shared; i < records.size(); ++i) {
    if (carries_honest_signature(*records[i], honest)) {
      throw Error(ErrorCode::SignatureForgery,
                  "record " + std::to_string(i) + " carries an honest signature the honest execution never produced");
    }
  }
}

LedgerState forge_ba_state(const LedgerState& base, const std::set<NodeId>& byzantine,
                           std::size_t extra_records, std::uint64_t salt) {
  LedgerState out = base;
  for (std::size_t i = 0; i < extra_records; ++i) {
    const auto digest = Digest::of("forged:" + std::to_string(salt) + ":" + std::to_string(base.size() + i));
    out = out.append(AppendRecord(digest, BaEvidence{{byzantine.begin(), byzantine.end()}}));
  }
  return out;
}

LocalStateBag fabricate_ba_bag(const LedgerState& truth, const std::vector<NodeId>& committee,
                               const std::set<NodeId>& byzantine, const LedgerState& forgery) {
  std::map<NodeId, LedgerState> forgeries;
  for (const auto& id : byzantine) forgeries.emplace(id, forgery);
  return fabricate_ba_bag(truth, committee, byzantine, forgeries);
}

LocalStateBag fabricate_ba_bag(const LedgerState& truth, const std::vector<NodeId>& committee,
                               const std::set<NodeId>& byzantine,
                               const std::map<NodeId, LedgerState>& forgeries) {
  std::set<NodeId> honest;
  for (const auto& id : committee) {
    if (!byzantine.contains(id)) honest.insert(id);
  }
  for (const auto& id : byzantine) {
    if (std::find(committee.begin(), committee.end(), id) == committee.end()) {
      throw Error(ErrorCode::InvalidArgument, id.to_string() + " is Byzantine but not a committee member");
    }
  }
  LocalStateBag bag;
  for (const auto& id : committee) {
    if (honest.contains(id)) {
      bag.insert(id, truth);
      continue;
    }
    auto it = forgeries.find(id);
    if (it == forgeries.end()) throw Error(ErrorCode::InvalidArgument, "no forgery for " + id.to_string());
    if (!it->second.same_genesis(truth)) throw Error(ErrorCode::GenesisMismatch, "forgery uses another genesis");
    audit_signatures(it->second, truth, honest);
    bag.insert(id, it->second);
  }
  return bag;
}

std::optional<LedgerState> private_mine(const LedgerState& anchor, std::size_t fork_depth, double q_share,
                                        std::size_t horizon, SeededRng& rng, const NodeId& adversary) {
  if (!(q_share > 0.0 && q_share < 1.0)) throw Error(ErrorCode::InvalidShare, "q_share must lie in (0, 1)");
  if (anchor.genesis().kind() != ConsensusKind::PoW) {
    throw Error(ErrorCode::EvidenceKindMismatch, "private_mine needs a PoW anchor");
  }
  if (fork_depth > anchor.size()) {
    throw Error(ErrorCode::InvalidArgument, "anchor has fewer than fork_depth records");
  }
  if (fork_depth == 0) return anchor;

  static const NodeId kHonest = NodeId::from_label("honest");
  LedgerState honest = anchor;
  LedgerState branch = truncate(anchor, fork_depth);
  for (std::size_t i = 0; i < horizon; ++i) {
    if (rng.bernoulli(q_share)) {
      branch = branch.append(withheld_block(adversary));
      if (!pow_prefers(honest, branch)) return branch;
    } else {
      const auto digest = Digest::of("race:" + std::to_string(honest.size()));
      honest = honest.append(AppendRecord(digest, PowEvidence{1, kHonest}));
    }
  }
  return std::nullopt;
}

MirrorMap mirror_network(std::span<const NodeProfile> roster, std::span<const NodeId> pool) {
  std::set<NodeId> roster_ids;
  std::vector<NodeId> honest;
  for (const auto& node : roster) {
    if (!roster_ids.insert(node.id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate roster id " + node.id.to_string());
    }
    if (node.honest) honest.push_back(node.id);
  }
  std::set<NodeId> pool_ids;
  for (const auto& id : pool) {
    if (roster_ids.contains(id)) throw Error(ErrorCode::InvalidArgument, id.to_string() + " is in roster and pool");
    if (!pool_ids.insert(id).second) throw Error(ErrorCode::InvalidArgument, "duplicate pool id " + id.to_string());
  }
  if (pool.size() < honest.size()) {
    throw Error(ErrorCode::PoolExhausted, std::to_string(honest.size()) + " honest ids but only " +
                                              std::to_string(pool.size()) + " pool ids");
  }
  std::sort(honest.begin(), honest.end());
  std::map<NodeId, NodeId> pairs;
  for (std::size_t i = 0; i < honest.size(); ++i) pairs.emplace(honest[i], pool[i]);
  for (const auto& node : roster) {
    if (!node.honest) pairs.emplace(node.id, node.id);
  }
  return MirrorMap(std::move(pairs));
}

namespace {

Evidence relabel_evidence(const Evidence& evidence, const MirrorMap& map) {
  return std::visit(
      [&](const auto& e) -> Evidence {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, BaEvidence>) {
          BaEvidence out;
          for (const auto& id : e.signers) out.signers.push_back(map.relabel(id));
          return out;
        } else if constexpr (std::is_same_v<T, PowEvidence>) {
          return PowEvidence{e.work, map.relabel(e.producer)};
        } else {
          PosEvidence out;
          for (const auto& s : e.signers) out.signers.push_back({map.relabel(s.signer), s.stake});
          for (const auto& t : e.transfers) out.transfers.push_back({map.relabel(t.from), map.relabel(t.to), t.amount});
          return out;
        }
      },
      evidence);
}

}  // namespace

LedgerState relabel(const LedgerState& state, const MirrorMap& map) {
  LedgerState out(state.genesis_ptr());
  for (const auto* record : state.record_view()) {
    out = out.append(AppendRecord(record->payload_digest(), relabel_evidence(record->evidence(), map)));
  }
  return out;
}

EventBatch relabel(const EventBatch& batch, const MirrorMap& map) {
  EventBatch out = batch;
  for (auto& t : out.transfers) {
    t.from = map.relabel(t.from);
    t.to = map.relabel(t.to);
  }
  if (out.coalition) {
    for (auto& id : *out.coalition) id = map.relabel(id);
  }
  return out;
}

std::vector<LedgerState> run_pos(const LedgerState& genesis_state, std::span<const EventBatch> events,
                                 std::size_t t) {
  if (t > events.size()) throw Error(ErrorCode::InvalidArgument, "fewer event batches than steps");
  std::vector<LedgerState> states{genesis_state};
  StakeLedger stake = replay_stake(genesis_state);
  for (std::size_t step = 0; step < t; ++step) {
    const auto& e = events[step];
    std::set<NodeId> coalition;
    if (e.coalition) {
      coalition.insert(e.coalition->begin(), e.coalition->end());
    } else {
      for (const auto& [id, amount] : stake.balances()) {
        if (amount > 0) coalition.insert(id);
      }
    }
    try {
      states.push_back(step_pos(states.back(), stake, coalition, e));
      stake = stake.apply(e.transfers);
    } catch (const Error& err) {
      throw err.at_step(step);
    }
  }
  return states;
}

AttackTrace long_range_attack(const GenesisDescriptor& genesis, std::span<const EventBatch> events,
                              std::span<const NodeProfile> roster, const MirrorMap& map, std::size_t t) {
  if (genesis.kind() != ConsensusKind::PoS) throw Error(ErrorCode::InvalidScenario, "long-range attack needs PoS");
  std::vector<NodeId> honest;
  for (const auto& node : roster) {
    if (node.honest) {
      honest.push_back(node.id);
      (void)map.at(node.id);
    } else if (map.relabel(node.id) != node.id) {
      throw Error(ErrorCode::InvalidArgument, "adversary id " + node.id.to_string() + " must be a fixed point");
    }
  }
  for (const auto& [holder, amount] : *genesis.initial_stake()) {
    if (map.relabel(holder) != holder) {
      throw Error(ErrorCode::InvalidScenario,
                  "genesis stakeholder " + holder.to_string() +
                      " is honest; both worlds share the genesis, so its holders must be adversary-owned");
    }
  }

  const LedgerState origin(genesis);
  std::vector<EventBatch> mirrored_events;
  mirrored_events.reserve(events.size());
  for (const auto& e : events) mirrored_events.push_back(relabel(e, map));

  AttackTrace trace;
  trace.honest_states = run_pos(origin, events, t);
  trace.adversary_states = run_pos(origin, mirrored_events, t);
  for (std::size_t step = 0; step <= t; ++step) {
    LocalStateBag bag;
    for (const auto& id : honest) {
      bag.insert(id, trace.honest_states[step]);
      bag.insert(map.at(id), trace.adversary_states[step]);
    }
    trace.merged_bags.push_back(std::move(bag));
  }
  return trace;
}

}  // namespace sdlt
