#include "sdlt/consensus.hpp"

#include <algorithm>
#include <cmath>

#include "sdlt/codec.hpp"
#include "sdlt/error.hpp"

namespace sdlt {

Digest EventBatch::digest() const {
  std::string buf(8, '\0');
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>(time >> (8 * i));
  buf += payload;
  return Digest::of(buf);
}

StakeLedger::StakeLedger(StakeMap balances) : balances_(std::move(balances)) {
  for (const auto& [id, amount] : balances_) {
    if (amount > UINT64_MAX - total_) throw Error(ErrorCode::InvalidArgument, "stake total overflows");
    total_ += amount;
  }
}

TokenAmount StakeLedger::balance(const NodeId& node) const {
  auto it = balances_.find(node);
  return it == balances_.end() ? 0 : it->second;
}

StakeLedger StakeLedger::apply(std::span<const Transfer> transfers) const {
  StakeLedger next = *this;
  for (const auto& t : transfers) {
    if (t.amount == 0) throw Error(ErrorCode::InvalidTransfer, "transfer amount must be positive");
    auto from = next.balances_.find(t.from);
    if (from == next.balances_.end() || from->second < t.amount) {
      throw Error(ErrorCode::NegativeBalance, t.from.to_string() + " cannot send " + std::to_string(t.amount) +
                                                  " (holds " + std::to_string(next.balance(t.from)) + ")");
    }
    from->second -= t.amount;
    next.balances_[t.to] += t.amount;
  }
  return next;
}

LedgerState step_ba(const LedgerState& s, const std::vector<NodeId>& committee,
                    const std::set<NodeId>& byzantine, const EventBatch& e) {
  const auto& genesis_committee = s.genesis().ba_committee();
  if (!genesis_committee) throw Error(ErrorCode::NotBaGenesis, "step_ba on a non-BA ledger");
  if (committee != *genesis_committee) {
    throw Error(ErrorCode::InvalidArgument, "committee differs from the genesis committee");
  }
  BaEvidence evidence;
  std::size_t faulty = 0;
  for (const auto& id : committee) {
    if (byzantine.contains(id)) {
      ++faulty;
    } else {
      evidence.signers.push_back(id);
    }
  }
  if (2 * faulty >= committee.size()) {
    throw Error(ErrorCode::QuorumUnavailable, std::to_string(faulty) + " of " + std::to_string(committee.size()) +
                                                  " committee members are Byzantine");
  }
  return s.append(AppendRecord(e.digest(), std::move(evidence)));
}

const NodeProfile& sample_producer(std::span<const NodeProfile> online, SeededRng& rng) {
  if (online.empty()) throw Error(ErrorCode::EmptyNetwork, "no node is online");
  double sum = 0.0;
  for (const auto& n : online) {
    if (!(n.power >= 0.0 && n.power <= 1.0)) throw Error(ErrorCode::InvalidShare, "power outside [0, 1]");
    sum += n.power;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidShare, "online powers sum to " + std::to_string(sum) + ", expected 1");
  }
  const double u = rng.uniform01();
  double acc = 0.0;
  const NodeProfile* last_positive = nullptr;
  for (const auto& n : online) {
    if (n.power <= 0.0) continue;
    last_positive = &n;
    acc += n.power;
    if (u < acc) return n;
  }
  // Rounding left u just above the accumulated sum.
  return *last_positive;
}

LedgerState step_pow(const LedgerState& s, std::span<const NodeProfile> online, const EventBatch& e,
                     SeededRng& rng) {
  const auto& producer = sample_producer(online, rng);
  return s.append(AppendRecord(e.digest(), PowEvidence{1, producer.id}));
}

std::uint64_t pow_total(const LedgerState& s) {
  auto work = s.pow_work();
  if (!work) throw Error(ErrorCode::EvidenceKindMismatch, "state holds non-PoW records");
  return *work;
}

bool pow_prefers(const LedgerState& a, const LedgerState& b) {
  const auto wa = pow_total(a);
  const auto wb = pow_total(b);
  if (wa != wb) return wa > wb;
  if (a == b) return false;
  return canonical_bytes(a) < canonical_bytes(b);
}

LedgerState step_pos(const LedgerState& s, const StakeLedger& stake, const std::set<NodeId>& coalition,
                     const EventBatch& e) {
  if (s.genesis().kind() != ConsensusKind::PoS) {
    throw Error(ErrorCode::EvidenceKindMismatch, "step_pos on a non-PoS ledger");
  }
  PosEvidence evidence;
  TokenAmount held = 0;
  for (const auto& id : coalition) {
    auto amount = stake.balance(id);
    held += amount;
    evidence.signers.push_back(StakeSignature{id, amount});
  }
  // held > total / 2, exactly, on integers.
  if (held <= stake.total() - held) {
    throw Error(ErrorCode::InsufficientStake, "coalition holds " + std::to_string(held) + " of " +
                                                  std::to_string(stake.total()) + " tokens");
  }
  (void)stake.apply(e.transfers);
  evidence.transfers = e.transfers;
  return s.append(AppendRecord(e.digest(), std::move(evidence)));
}

namespace {

StakeLedger genesis_stake(const LedgerState& s) {
  const auto& initial = s.genesis().initial_stake();
  if (!initial) throw Error(ErrorCode::EvidenceKindMismatch, "state has no PoS genesis");
  return StakeLedger(*initial);
}

}  // namespace

StakeLedger replay_stake(const LedgerState& s, std::span<const EventBatch> events) {
  if (events.size() != s.size()) {
    throw Error(ErrorCode::AlignmentError, std::to_string(events.size()) + " event batches for " +
                                               std::to_string(s.size()) + " records");
  }
  StakeLedger stake = genesis_stake(s);
  for (const auto& e : events) stake = stake.apply(e.transfers);
  return stake;
}

StakeLedger replay_stake(const LedgerState& s) {
  StakeLedger stake = genesis_stake(s);
  for (const auto* record : s.record_view()) {
    stake = stake.apply(std::get<PosEvidence>(record->evidence()).transfers);
  }
  return stake;
}

}  // namespace sdlt
