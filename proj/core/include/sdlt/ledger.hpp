#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdlt/digest.hpp"

namespace sdlt {

/// Opaque 16-byte node address. Short ASCII labels ("alice", "n3") are stored
/// zero-padded so configs and JSON stay readable.
class NodeId {
 public:
  static constexpr std::size_t kSize = 16;
  using Bytes = std::array<std::uint8_t, kSize>;

  NodeId() = default;
  explicit NodeId(const Bytes& bytes) : bytes_(bytes) {}

  static NodeId from_label(std::string_view label);
  static NodeId from_hex(std::string_view hex);
  /// Accepts "0x" followed by 32 hex digits, or a label of at most 16 bytes.
  static NodeId parse(std::string_view text);

  /// Inverse of parse(): the label when the bytes are a printable,
  /// zero-padded label, the 0x-prefixed hex form otherwise.
  std::string to_string() const;

  const Bytes& bytes() const { return bytes_; }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;

 private:
  Bytes bytes_{};
};

enum class ConsensusKind { BA, PoW, PoS };

std::string_view to_string(ConsensusKind kind);

using TokenAmount = std::uint64_t;
using StakeMap = std::map<NodeId, TokenAmount>;

/// The initial state I. BA genesis carries the committee, PoS genesis the
/// initial token distribution, PoW genesis neither.
class GenesisDescriptor {
 public:
  /// PoW genesis with an empty tag.
  GenesisDescriptor() = default;

  static GenesisDescriptor ba(std::string tag, std::vector<NodeId> committee);
  static GenesisDescriptor pow(std::string tag);
  static GenesisDescriptor pos(std::string tag, StakeMap initial_stake);

  const std::string& tag() const { return tag_; }
  const std::optional<std::vector<NodeId>>& ba_committee() const { return committee_; }
  const std::optional<StakeMap>& initial_stake() const { return stake_; }

  ConsensusKind kind() const;

  friend bool operator==(const GenesisDescriptor&, const GenesisDescriptor&) = default;

 private:
  std::string tag_;
  std::optional<std::vector<NodeId>> committee_;
  std::optional<StakeMap> stake_;
};

struct BaEvidence {
  std::vector<NodeId> signers;  // sorted, unique
  friend bool operator==(const BaEvidence&, const BaEvidence&) = default;
};

struct PowEvidence {
  std::uint64_t work = 1;
  NodeId producer;
  friend bool operator==(const PowEvidence&, const PowEvidence&) = default;
};

struct StakeSignature {
  NodeId signer;
  TokenAmount stake = 0;
  friend bool operator==(const StakeSignature&, const StakeSignature&) = default;
};

struct Transfer {
  NodeId from;
  NodeId to;
  TokenAmount amount = 0;
  friend bool operator==(const Transfer&, const Transfer&) = default;
};

/// Signing coalition with each member's stake before the append, plus the
/// token transfers the append applied (in order).
struct PosEvidence {
  std::vector<StakeSignature> signers;  // sorted by signer, unique
  std::vector<Transfer> transfers;
  friend bool operator==(const PosEvidence&, const PosEvidence&) = default;
};

using Evidence = std::variant<BaEvidence, PowEvidence, PosEvidence>;

ConsensusKind evidence_kind(const Evidence& evidence);

/// One "append": digest of the appended event batch plus the consensus
/// evidence. Construction normalizes signer sets into sorted order and rejects
/// duplicate signers and zero work.
class AppendRecord {
 public:
  AppendRecord(const Digest& payload_digest, Evidence evidence);

  const Digest& payload_digest() const { return digest_; }
  const Evidence& evidence() const { return evidence_; }
  ConsensusKind kind() const { return evidence_kind(evidence_); }

  friend bool operator==(const AppendRecord&, const AppendRecord&) = default;

 private:
  Digest digest_;
  Evidence evidence_;
};

/// S_t: genesis plus an append sequence. Values are immutable and share
/// structure: append() and prefix() are O(1) and O(log n) respectively, and
/// copies are cheap, so per-step snapshots cost nothing.
class LedgerState {
 public:
  explicit LedgerState(GenesisDescriptor genesis);
  explicit LedgerState(std::shared_ptr<const GenesisDescriptor> genesis);

  const GenesisDescriptor& genesis() const { return *genesis_; }
  const std::shared_ptr<const GenesisDescriptor>& genesis_ptr() const { return genesis_; }
  bool same_genesis(const LedgerState& other) const;

  std::size_t size() const;
  bool empty() const { return size() == 0; }

  const AppendRecord& record(std::size_t index) const;
  const AppendRecord& back() const;
  /// Records in append order. Pointers stay valid while this state is alive.
  std::vector<const AppendRecord*> record_view() const;
  std::vector<AppendRecord> records() const;

  /// Throws EvidenceKindMismatch if the record does not match genesis kind.
  LedgerState append(AppendRecord record) const;
  /// The first `length` records (length <= size()).
  LedgerState prefix(std::size_t length) const;

  /// Sum of PoW work, or nullopt if some record is not PoW evidence.
  std::optional<std::uint64_t> pow_work() const;

  /// Structural equality; coincides with canonical-byte equality.
  friend bool operator==(const LedgerState& a, const LedgerState& b);

 private:
  struct Block;

  LedgerState(std::shared_ptr<const GenesisDescriptor> genesis, std::shared_ptr<const Block> tip);
  const Block* ancestor(std::size_t height) const;

  std::shared_ptr<const GenesisDescriptor> genesis_;
  std::shared_ptr<const Block> tip_;
};

/// 𝕊_t: (node, claimed state) pairs, one per node, kept sorted by node id so
/// iteration order never depends on insertion order.
class LocalStateBag {
 public:
  struct Entry {
    NodeId node;
    LedgerState state;
  };

  LocalStateBag() = default;

  /// Inserts or replaces the node's claim (last claim wins). Throws
  /// GenesisMismatch if the state's genesis differs from existing entries.
  void insert(const NodeId& node, LedgerState state);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const LedgerState* find(const NodeId& node) const;

  /// Sub-bag of the entries whose bit is set in `mask` (size() <= 64).
  LocalStateBag select(std::uint64_t mask) const;
  LocalStateBag select(const std::vector<bool>& keep) const;

 private:
  std::vector<Entry> entries_;
};

/// a ≼ b. Throws GenesisMismatch when the genesis descriptors differ.
bool is_prefix(const LedgerState& a, const LedgerState& b);

/// S^{-k}; k beyond the length saturates at the genesis-only state.
LedgerState truncate(const LedgerState& s, std::size_t k);

/// Set equality under (node bytes, canonical bytes of state).
bool bag_equal(const LocalStateBag& x, const LocalStateBag& y);

}  // namespace sdlt
