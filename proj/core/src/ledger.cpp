#include "sdlt/ledger.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "sdlt/codec.hpp"
#include "sdlt/error.hpp"

namespace sdlt {

// ---------------------------------------------------------------------------
// NodeId

NodeId NodeId::from_label(std::string_view label) {
  if (label.empty()) throw Error(ErrorCode::InvalidArgument, "node label must not be empty");
  if (label.size() > kSize) {
    throw Error(ErrorCode::InvalidArgument,
                "node label '" + std::string(label) + "' is longer than 16 bytes");
  }
  Bytes bytes{};
  std::copy(label.begin(), label.end(), bytes.begin());
  return NodeId(bytes);
}

NodeId NodeId::from_hex(std::string_view hex) {
  if (hex.size() != 2 * kSize) {
    throw Error(ErrorCode::InvalidArgument, "node id hex must have 32 digits");
  }
  Bytes bytes{};
  auto value = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::InvalidArgument, "node id hex has a non-hex character");
  };
  for (std::size_t i = 0; i < kSize; ++i) {
    bytes[i] = static_cast<std::uint8_t>(value(hex[2 * i]) << 4 | value(hex[2 * i + 1]));
  }
  return NodeId(bytes);
}

NodeId NodeId::parse(std::string_view text) {
  if (text.size() == 2 + 2 * kSize && text.substr(0, 2) == "0x") return from_hex(text.substr(2));
  return from_label(text);
}

std::string NodeId::to_string() const {
  std::size_t len = 0;
  while (len < kSize && bytes_[len] != 0) ++len;
  bool label = len > 0;
  for (std::size_t i = 0; i < kSize && label; ++i) {
    if (i < len) {
      label = std::isprint(bytes_[i]) != 0;
    } else {
      label = bytes_[i] == 0;
    }
  }
  if (label) {
    std::string_view text(reinterpret_cast<const char*>(bytes_.data()), len);
    // "0x..." labels would be read back as hex.
    if (!(text.size() >= 2 && text.substr(0, 2) == "0x")) return std::string(text);
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "0x";
  for (auto b : bytes_) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string_view to_string(ConsensusKind kind) {
  switch (kind) {
    case ConsensusKind::BA: return "BA";
    case ConsensusKind::PoW: return "PoW";
    case ConsensusKind::PoS: return "PoS";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// GenesisDescriptor

GenesisDescriptor GenesisDescriptor::ba(std::string tag, std::vector<NodeId> committee) {
  if (committee.empty()) throw Error(ErrorCode::InvalidGenesis, "BA committee must not be empty");
  std::set<NodeId> seen(committee.begin(), committee.end());
  if (seen.size() != committee.size()) {
    throw Error(ErrorCode::InvalidGenesis, "BA committee contains duplicate ids");
  }
  GenesisDescriptor g;
  g.tag_ = std::move(tag);
  g.committee_ = std::move(committee);
  return g;
}

GenesisDescriptor GenesisDescriptor::pow(std::string tag) {
  GenesisDescriptor g;
  g.tag_ = std::move(tag);
  return g;
}

GenesisDescriptor GenesisDescriptor::pos(std::string tag, StakeMap initial_stake) {
  TokenAmount total = 0;
  for (const auto& [id, amount] : initial_stake) {
    if (amount > UINT64_MAX - total) throw Error(ErrorCode::InvalidGenesis, "initial stake overflows");
    total += amount;
  }
  if (total == 0) throw Error(ErrorCode::InvalidGenesis, "PoS genesis needs positive total stake");
  GenesisDescriptor g;
  g.tag_ = std::move(tag);
  g.stake_ = std::move(initial_stake);
  return g;
}

ConsensusKind GenesisDescriptor::kind() const {
  if (committee_) return ConsensusKind::BA;
  if (stake_) return ConsensusKind::PoS;
  return ConsensusKind::PoW;
}

// ---------------------------------------------------------------------------
// AppendRecord

ConsensusKind evidence_kind(const Evidence& evidence) {
  switch (evidence.index()) {
    case 0: return ConsensusKind::BA;
    case 1: return ConsensusKind::PoW;
    default: return ConsensusKind::PoS;
  }
}

namespace {

struct Normalize {
  void operator()(BaEvidence& e) const {
    std::sort(e.signers.begin(), e.signers.end());
    if (std::adjacent_find(e.signers.begin(), e.signers.end()) != e.signers.end()) {
      throw Error(ErrorCode::InvalidEvidence, "duplicate BA signer");
    }
  }
  void operator()(PowEvidence& e) const {
    if (e.work < 1) throw Error(ErrorCode::InvalidEvidence, "PoW work must be at least 1");
  }
  void operator()(PosEvidence& e) const {
    std::sort(e.signers.begin(), e.signers.end(),
              [](const auto& a, const auto& b) { return a.signer < b.signer; });
    auto dup = std::adjacent_find(e.signers.begin(), e.signers.end(),
                                  [](const auto& a, const auto& b) { return a.signer == b.signer; });
    if (dup != e.signers.end()) throw Error(ErrorCode::InvalidEvidence, "duplicate PoS signer");
    for (const auto& t : e.transfers) {
      if (t.amount == 0) throw Error(ErrorCode::InvalidEvidence, "PoS transfer of zero tokens");
    }
  }
};

}  // namespace

AppendRecord::AppendRecord(const Digest& payload_digest, Evidence evidence)
    : digest_(payload_digest), evidence_(std::move(evidence)) {
  std::visit(Normalize{}, evidence_);
}

// ---------------------------------------------------------------------------
// LedgerState

struct LedgerState::Block {
  Block(std::shared_ptr<const Block> parent_block, AppendRecord rec)
      : parent(std::move(parent_block)), record(std::move(rec)) {
    height = parent ? parent->height + 1 : 1;
    auto* pow = std::get_if<PowEvidence>(&record.evidence());
    bool parent_pow = parent ? parent->all_pow : true;
    all_pow = parent_pow && pow != nullptr;
    work = all_pow ? (parent ? parent->work : 0) + pow->work : 0;
    skip = parent ? parent->ancestor(skip_height(height)) : nullptr;
  }

  // Unlink iteratively; long chains would otherwise recurse once per block.
  ~Block() {
    auto next = std::move(parent);
    while (next && next.use_count() == 1) next = std::move(next->parent);
  }

  // Skip-list heights as in Bitcoin's CBlockIndex: every block links to one
  // far ancestor so ancestor lookups take O(log n) hops.
  static std::size_t invert_lowest_one(std::size_t n) { return n & (n - 1); }
  static std::size_t skip_height(std::size_t h) {
    if (h < 2) return 0;
    return (h & 1) ? invert_lowest_one(invert_lowest_one(h - 1)) + 1 : invert_lowest_one(h);
  }

  const Block* ancestor(std::size_t target) const {
    if (target > height) return nullptr;
    const Block* walk = this;
    std::size_t h = height;
    while (h > target) {
      std::size_t h_skip = skip_height(h);
      std::size_t h_skip_prev = skip_height(h - 1);
      if (walk->skip != nullptr &&
          (h_skip == target ||
           (h_skip > target && !(h_skip_prev + 2 < h_skip && h_skip_prev >= target)))) {
        walk = walk->skip;
        h = h_skip;
      } else {
        walk = walk->parent.get();
        --h;
      }
      if (walk == nullptr) return nullptr;
    }
    return walk;
  }

  mutable std::shared_ptr<const Block> parent;
  const Block* skip = nullptr;
  AppendRecord record;
  std::size_t height = 0;
  std::uint64_t work = 0;
  bool all_pow = true;
};

LedgerState::LedgerState(GenesisDescriptor genesis)
    : genesis_(std::make_shared<const GenesisDescriptor>(std::move(genesis))) {}

LedgerState::LedgerState(std::shared_ptr<const GenesisDescriptor> genesis) : genesis_(std::move(genesis)) {
  if (!genesis_) throw Error(ErrorCode::InvalidGenesis, "null genesis");
}

LedgerState::LedgerState(std::shared_ptr<const GenesisDescriptor> genesis, std::shared_ptr<const Block> tip)
    : genesis_(std::move(genesis)), tip_(std::move(tip)) {}

bool LedgerState::same_genesis(const LedgerState& other) const {
  return genesis_ == other.genesis_ || *genesis_ == *other.genesis_;
}

std::size_t LedgerState::size() const { return tip_ ? tip_->height : 0; }

const LedgerState::Block* LedgerState::ancestor(std::size_t height) const {
  if (height == 0 || !tip_) return nullptr;
  return tip_->ancestor(height);
}

const AppendRecord& LedgerState::record(std::size_t index) const {
  if (index >= size()) throw Error(ErrorCode::InvalidArgument, "record index out of range");
  return ancestor(index + 1)->record;
}

const AppendRecord& LedgerState::back() const {
  if (!tip_) throw Error(ErrorCode::InvalidArgument, "genesis-only state has no records");
  return tip_->record;
}

std::vector<const AppendRecord*> LedgerState::record_view() const {
  std::vector<const AppendRecord*> out(size());
  std::size_t i = out.size();
  for (const Block* b = tip_.get(); b != nullptr; b = b->parent.get()) out[--i] = &b->record;
  return out;
}

std::vector<AppendRecord> LedgerState::records() const {
  std::vector<AppendRecord> out;
  out.reserve(size());
  for (const auto* r : record_view()) out.push_back(*r);
  return out;
}

LedgerState LedgerState::append(AppendRecord record) const {
  if (record.kind() != genesis_->kind()) {
    throw Error(ErrorCode::EvidenceKindMismatch,
                std::string(to_string(record.kind())) + " evidence on a " +
                    std::string(to_string(genesis_->kind())) + " ledger");
  }
  return LedgerState(genesis_, std::make_shared<const Block>(tip_, std::move(record)));
}

LedgerState LedgerState::prefix(std::size_t length) const {
  if (length > size()) throw Error(ErrorCode::InvalidArgument, "prefix longer than state");
  if (length == size()) return *this;
  if (length == 0) return LedgerState(genesis_);
  // The child of the target owns it through its parent link.
  const Block* child = ancestor(length + 1);
  return LedgerState(genesis_, child->parent);
}

std::optional<std::uint64_t> LedgerState::pow_work() const {
  if (!tip_) return 0;
  if (!tip_->all_pow) return std::nullopt;
  return tip_->work;
}

bool operator==(const LedgerState& a, const LedgerState& b) {
  if (!a.same_genesis(b) || a.size() != b.size()) return false;
  const LedgerState::Block* x = a.tip_.get();
  const LedgerState::Block* y = b.tip_.get();
  while (x != y) {
    if (!(x->record == y->record)) return false;
    x = x->parent.get();
    y = y->parent.get();
  }
  return true;
}

// ---------------------------------------------------------------------------
// LocalStateBag

void LocalStateBag::insert(const NodeId& node, LedgerState state) {
  if (!entries_.empty() && !entries_.front().state.same_genesis(state)) {
    throw Error(ErrorCode::GenesisMismatch, "bag entries must share one genesis");
  }
  auto it = std::lower_bound(entries_.begin(), entries_.end(), node,
                             [](const Entry& e, const NodeId& id) { return e.node < id; });
  if (it != entries_.end() && it->node == node) {
    it->state = std::move(state);
  } else {
    entries_.insert(it, Entry{node, std::move(state)});
  }
}

const LedgerState* LocalStateBag::find(const NodeId& node) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), node,
                             [](const Entry& e, const NodeId& id) { return e.node < id; });
  if (it == entries_.end() || it->node != node) return nullptr;
  return &it->state;
}

LocalStateBag LocalStateBag::select(std::uint64_t mask) const {
  if (entries_.size() > 64) throw Error(ErrorCode::InvalidArgument, "mask selection needs <= 64 entries");
  LocalStateBag out;
  out.entries_.reserve(static_cast<std::size_t>(__builtin_popcountll(mask)));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (mask >> i & 1U) out.entries_.push_back(entries_[i]);
  }
  return out;
}

LocalStateBag LocalStateBag::select(const std::vector<bool>& keep) const {
  if (keep.size() != entries_.size()) throw Error(ErrorCode::InvalidArgument, "selection size mismatch");
  LocalStateBag out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (keep[i]) out.entries_.push_back(entries_[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations

bool is_prefix(const LedgerState& a, const LedgerState& b) {
  if (!a.same_genesis(b)) throw Error(ErrorCode::GenesisMismatch, "is_prefix across different genesis");
  if (a.size() > b.size()) return false;
  return b.prefix(a.size()) == a;
}

LedgerState truncate(const LedgerState& s, std::size_t k) {
  return s.prefix(k >= s.size() ? 0 : s.size() - k);
}

bool bag_equal(const LocalStateBag& x, const LocalStateBag& y) {
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& ex = x.entries()[i];
    const auto& ey = y.entries()[i];
    if (ex.node != ey.node) return false;
    if (canonical_bytes(ex.state) != canonical_bytes(ey.state)) return false;
  }
  return true;
}

}  // namespace sdlt
