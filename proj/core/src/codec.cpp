#include "sdlt/codec.hpp"

#include <algorithm>
#include <cstring>

#include "sdlt/error.hpp"

namespace sdlt {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'D', 'L', 'T'};
constexpr std::uint8_t kVersion = 1;

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const std::uint8_t* data, std::size_t n) { out_.insert(out_.end(), data, data + n); }
  void id(const NodeId& node) { raw(node.bytes().data(), NodeId::kSize); }
  void count(std::size_t n) {
    if (n > UINT32_MAX) throw Error(ErrorCode::InvalidArgument, "collection too large to encode");
    u32(static_cast<std::uint32_t>(n));
  }
  void str(const std::string& s) {
    count(s.size());
    raw(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  }

 private:
  Bytes& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  NodeId id() {
    NodeId::Bytes b{};
    auto p = take(NodeId::kSize);
    std::copy(p.begin(), p.end(), b.begin());
    return NodeId(b);
  }
  Digest digest() {
    Digest d;
    auto p = take(d.bytes.size());
    std::copy(p.begin(), p.end(), d.bytes.begin());
    return d;
  }
  std::string str() {
    auto n = u32();
    auto p = take(n);
    return std::string(reinterpret_cast<const char*>(p.data()), p.size());
  }
  // Guards against absurd counts before reserving memory.
  std::uint32_t count(std::size_t min_item_size) {
    auto n = u32();
    if (static_cast<std::uint64_t>(n) * min_item_size > remaining()) malformed("count exceeds input");
    return n;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

  [[noreturn]] static void malformed(const std::string& why) { throw Error(ErrorCode::Malformed, why); }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) malformed("unexpected end of input");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void encode_genesis(Writer& w, const GenesisDescriptor& g) {
  w.str(g.tag());
  if (const auto& committee = g.ba_committee()) {
    w.u8(1);
    w.count(committee->size());
    for (const auto& id : *committee) w.id(id);
  } else {
    w.u8(0);
  }
  if (const auto& stake = g.initial_stake()) {
    w.u8(1);
    w.count(stake->size());
    for (const auto& [id, amount] : *stake) {
      w.id(id);
      w.u64(amount);
    }
  } else {
    w.u8(0);
  }
}

struct EncodeEvidence {
  Writer& w;
  void operator()(const BaEvidence& e) const {
    w.u8(0);
    w.count(e.signers.size());
    for (const auto& id : e.signers) w.id(id);
  }
  void operator()(const PowEvidence& e) const {
    w.u8(1);
    w.u64(e.work);
    w.id(e.producer);
  }
  void operator()(const PosEvidence& e) const {
    w.u8(2);
    w.count(e.signers.size());
    for (const auto& s : e.signers) {
      w.id(s.signer);
      w.u64(s.stake);
    }
    w.count(e.transfers.size());
    for (const auto& t : e.transfers) {
      w.id(t.from);
      w.id(t.to);
      w.u64(t.amount);
    }
  }
};

std::uint8_t read_flag(Reader& r) {
  auto f = r.u8();
  if (f > 1) Reader::malformed("presence flag must be 0 or 1");
  return f;
}

GenesisDescriptor decode_genesis(Reader& r) {
  std::string tag = r.str();
  std::optional<std::vector<NodeId>> committee;
  if (read_flag(r)) {
    auto n = r.count(NodeId::kSize);
    committee.emplace();
    for (std::uint32_t i = 0; i < n; ++i) committee->push_back(r.id());
  }
  std::optional<StakeMap> stake;
  if (read_flag(r)) {
    auto n = r.count(NodeId::kSize + 8);
    stake.emplace();
    std::optional<NodeId> prev;
    for (std::uint32_t i = 0; i < n; ++i) {
      auto id = r.id();
      if (prev && !(*prev < id)) Reader::malformed("stake map not strictly sorted");
      prev = id;
      (*stake)[id] = r.u64();
    }
  }
  if (committee && stake) Reader::malformed("genesis cannot be both BA and PoS");
  try {
    if (committee) return GenesisDescriptor::ba(std::move(tag), std::move(*committee));
    if (stake) return GenesisDescriptor::pos(std::move(tag), std::move(*stake));
    return GenesisDescriptor::pow(std::move(tag));
  } catch (const Error& e) {
    Reader::malformed(std::string("invalid genesis: ") + e.what());
  }
}

AppendRecord decode_record(Reader& r) {
  Digest digest = r.digest();
  switch (r.u8()) {
    case 0: {
      BaEvidence e;
      auto n = r.count(NodeId::kSize);
      for (std::uint32_t i = 0; i < n; ++i) {
        e.signers.push_back(r.id());
        if (i > 0 && !(e.signers[i - 1] < e.signers[i])) Reader::malformed("BA signers not strictly sorted");
      }
      return AppendRecord(digest, std::move(e));
    }
    case 1: {
      PowEvidence e;
      e.work = r.u64();
      e.producer = r.id();
      if (e.work == 0) Reader::malformed("zero PoW work");
      return AppendRecord(digest, e);
    }
    case 2: {
      PosEvidence e;
      auto n = r.count(NodeId::kSize + 8);
      for (std::uint32_t i = 0; i < n; ++i) {
        StakeSignature s;
        s.signer = r.id();
        s.stake = r.u64();
        if (i > 0 && !(e.signers.back().signer < s.signer)) Reader::malformed("PoS signers not strictly sorted");
        e.signers.push_back(s);
      }
      auto m = r.count(2 * NodeId::kSize + 8);
      for (std::uint32_t i = 0; i < m; ++i) {
        Transfer t;
        t.from = r.id();
        t.to = r.id();
        t.amount = r.u64();
        if (t.amount == 0) Reader::malformed("zero-amount transfer");
        e.transfers.push_back(t);
      }
      return AppendRecord(digest, std::move(e));
    }
    default:
      Reader::malformed("unknown evidence kind");
  }
}

}  // namespace

Bytes canonical_bytes(const LedgerState& state) {
  Bytes out;
  Writer w(out);
  w.raw(kMagic, sizeof kMagic);
  w.u8(kVersion);
  encode_genesis(w, state.genesis());
  w.u64(state.size());
  for (const auto* record : state.record_view()) {
    w.raw(record->payload_digest().bytes.data(), record->payload_digest().bytes.size());
    std::visit(EncodeEvidence{w}, record->evidence());
  }
  return out;
}

LedgerState decode_state(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (auto m : kMagic) {
    if (r.u8() != m) Reader::malformed("bad magic");
  }
  if (r.u8() != kVersion) Reader::malformed("unsupported version");
  LedgerState state(decode_genesis(r));
  auto n = r.u64();
  // Smallest record: digest + kind + empty BA signer count.
  if (n > r.remaining() / (32 + 1 + 4)) Reader::malformed("record count exceeds input");
  for (std::uint64_t i = 0; i < n; ++i) {
    auto record = decode_record(r);
    try {
      state = state.append(std::move(record));
    } catch (const Error& e) {
      Reader::malformed(e.what());
    }
  }
  if (r.remaining() != 0) Reader::malformed("trailing bytes");
  return state;
}

}  // namespace sdlt
