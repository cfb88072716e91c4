#pragma once

// Hand-rolled generators for property tests. Everything is driven by
// SeededRng so a failing case is reproduced from its seed alone.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sdlt/consensus.hpp"
#include "sdlt/harness.hpp"
#include "sdlt/ledger.hpp"
#include "sdlt/rng.hpp"

namespace sdlt::testing {

inline NodeId node(const std::string& label) { return NodeId::from_label(label); }

inline std::vector<NodeId> nodes(const std::string& prefix, std::size_t n) {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(node(prefix + std::to_string(i)));
  return out;
}

inline NodeId random_node(SeededRng& rng, std::size_t universe = 8) {
  return node("n" + std::to_string(rng.below(universe)));
}

inline Digest random_digest(SeededRng& rng) {
  Digest d;
  for (auto& b : d.bytes) b = static_cast<std::uint8_t>(rng.next());
  return d;
}

inline GenesisDescriptor random_genesis(SeededRng& rng, ConsensusKind kind) {
  const std::string tag = "g" + std::to_string(rng.below(3));
  switch (kind) {
    case ConsensusKind::BA: {
      std::vector<NodeId> committee = nodes("n", 1 + rng.below(6));
      return GenesisDescriptor::ba(tag, committee);
    }
    case ConsensusKind::PoW:
      return GenesisDescriptor::pow(tag);
    case ConsensusKind::PoS: {
      StakeMap stake;
      const auto holders = 1 + rng.below(4);
      for (std::uint64_t i = 0; i < holders; ++i) stake[node("n" + std::to_string(i))] = 1 + rng.below(100);
      return GenesisDescriptor::pos(tag, stake);
    }
  }
  return GenesisDescriptor::pow(tag);
}

inline ConsensusKind random_kind(SeededRng& rng) {
  return static_cast<ConsensusKind>(rng.below(3));
}

/// One record valid on top of `s`. PoS transfers are drawn against the
/// balances that `s` implies, so the result replays cleanly.
inline AppendRecord random_record(SeededRng& rng, const LedgerState& s) {
  const Digest digest = rng.bernoulli(0.1) ? Digest::zero() : random_digest(rng);
  switch (s.genesis().kind()) {
    case ConsensusKind::BA: {
      BaEvidence e;
      for (const auto& id : *s.genesis().ba_committee()) {
        if (rng.bernoulli(0.6)) e.signers.push_back(id);
      }
      return AppendRecord(digest, e);
    }
    case ConsensusKind::PoW:
      return AppendRecord(digest, PowEvidence{1 + rng.below(3), random_node(rng)});
    case ConsensusKind::PoS: {
      auto stake = replay_stake(s);
      PosEvidence e;
      for (const auto& [id, amount] : stake.balances()) {
        if (amount > 0 && rng.bernoulli(0.7)) e.signers.push_back({id, amount});
      }
      const auto n = rng.below(3);
      for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<std::pair<NodeId, TokenAmount>> funded;
        for (const auto& [id, amount] : stake.balances()) {
          if (amount > 0) funded.emplace_back(id, amount);
        }
        if (funded.empty()) break;
        const auto& [from, balance] = funded[rng.below(funded.size())];
        Transfer t{from, random_node(rng, 6), 1 + rng.below(balance)};
        stake = stake.apply(std::span<const Transfer>(&t, 1));
        e.transfers.push_back(t);
      }
      return AppendRecord(digest, e);
    }
  }
  return AppendRecord(digest, PowEvidence{});
}

inline LedgerState extend(SeededRng& rng, LedgerState s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) s = s.append(random_record(rng, s));
  return s;
}

inline LedgerState random_state(SeededRng& rng, const GenesisDescriptor& genesis, std::size_t max_len = 12) {
  return extend(rng, LedgerState(genesis), rng.below(max_len + 1));
}

inline LedgerState random_state(SeededRng& rng, std::size_t max_len = 12) {
  return random_state(rng, random_genesis(rng, random_kind(rng)), max_len);
}

/// Random valid transfer list against `stake`; amounts never overdraw.
inline std::vector<Transfer> random_transfers(SeededRng& rng, StakeLedger stake, const std::vector<NodeId>& universe,
                                              std::size_t max_n = 4) {
  std::vector<Transfer> out;
  const auto n = rng.below(max_n + 1);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<NodeId> funded;
    for (const auto& [id, amount] : stake.balances()) {
      if (amount > 0) funded.push_back(id);
    }
    if (funded.empty()) break;
    const auto from = funded[rng.below(funded.size())];
    Transfer t{from, universe[rng.below(universe.size())], 1 + rng.below(stake.balance(from))};
    stake = stake.apply(std::span<const Transfer>(&t, 1));
    out.push_back(t);
  }
  return out;
}

/// Small PoS scenario: genesis stake with adversary-owned holders, honest
/// nodes that receive tokens by transfer, default coalitions.
/// `stakeholders` counts genesis holders plus honest nodes.
inline ScenarioConfig random_pos_scenario(SeededRng& rng, std::size_t stakeholders, std::size_t steps) {
  ScenarioConfig cfg;
  cfg.consensus = ConsensusKind::PoS;
  cfg.horizon = steps;
  cfg.seed = rng.next();
  const std::size_t malicious = 1 + rng.below(stakeholders - 1);
  const std::size_t honest = stakeholders - malicious;
  StakeMap stake;
  std::vector<NodeId> universe;
  for (std::size_t i = 0; i < malicious; ++i) {
    const auto id = node("m" + std::to_string(i));
    stake[id] = 10 + rng.below(90);
    cfg.roster.push_back(NodeProfile{id, false, 0.0, {}});
    universe.push_back(id);
  }
  std::vector<NodeId> honest_ids;
  for (std::size_t i = 0; i < honest; ++i) {
    const auto id = node("h" + std::to_string(i));
    cfg.roster.push_back(NodeProfile{id, true, 0.0, {}});
    universe.push_back(id);
    honest_ids.push_back(id);
  }
  cfg.genesis = GenesisDescriptor::pos("pos-" + std::to_string(rng.below(1000)), stake);
  StakeLedger ledger(stake);
  for (std::size_t t = 0; t < steps; ++t) {
    EventBatch e;
    e.time = t;
    e.payload = "e" + std::to_string(t) + ":" + std::to_string(rng.below(1000));
    e.transfers = random_transfers(rng, ledger, universe, 3);
    if (t == 0) {
      // The first batch always pays an honest node, so honest ids enter the
      // history and the two worlds diverge.
      const auto& [from, amount] = *ledger.balances().begin();
      Transfer pay{from, honest_ids[rng.below(honest_ids.size())], 1 + rng.below(amount)};
      e.transfers.insert(e.transfers.begin(), pay);
      // Re-draw the rest against the balances after `pay`.
      auto after = ledger.apply(std::span<const Transfer>(&pay, 1));
      auto rest = random_transfers(rng, after, universe, 2);
      e.transfers.resize(1);
      e.transfers.insert(e.transfers.end(), rest.begin(), rest.end());
    }
    ledger = ledger.apply(e.transfers);
    cfg.events.push_back(std::move(e));
  }
  return cfg;
}

}  // namespace sdlt::testing
