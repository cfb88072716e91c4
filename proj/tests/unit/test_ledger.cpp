#include <gtest/gtest.h>

#include "generators.hpp"
#include "sdlt/codec.hpp"
#include "sdlt/error.hpp"
#include "sdlt/ledger.hpp"

namespace sdlt {
namespace {

using testing::node;

constexpr int kCases = 1000;

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

AppendRecord pow_record(const std::string& payload, const std::string& producer = "p") {
  return AppendRecord(Digest::of(payload), PowEvidence{1, node(producer)});
}

// ---------------------------------------------------------------------------

TEST(NodeId, LabelRoundTrip) {
  const auto id = NodeId::from_label("alice");
  EXPECT_EQ(id.to_string(), "alice");
  EXPECT_EQ(NodeId::parse("alice"), id);
  EXPECT_EQ(id.bytes()[5], 0);
}

TEST(NodeId, HexRoundTrip) {
  NodeId::Bytes raw{};
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::uint8_t>(0xf0 + i);
  const NodeId id(raw);
  EXPECT_EQ(id.to_string(), "0xf0f1f2f3f4f5f6f7f8f9fafbfcfdfeff");
  EXPECT_EQ(NodeId::parse(id.to_string()), id);
}

TEST(NodeId, LabelThatLooksLikeHexIsPrintedAsHex) {
  const auto id = NodeId::from_label("0xabc");
  EXPECT_EQ(id.to_string().size(), 34u);
  EXPECT_EQ(NodeId::parse(id.to_string()), id);
}

TEST(NodeId, RejectsBadInput) {
  expect_code(ErrorCode::InvalidArgument, [] { NodeId::from_label(""); });
  expect_code(ErrorCode::InvalidArgument, [] { NodeId::from_label("seventeen-bytes!!"); });
  expect_code(ErrorCode::InvalidArgument, [] { NodeId::from_hex("zz"); });
}

TEST(NodeId, ParseIsInverseOfToString) {
  SeededRng rng(11);
  for (int i = 0; i < kCases; ++i) {
    NodeId::Bytes raw{};
    const auto len = rng.below(17);
    for (std::size_t b = 0; b < raw.size(); ++b) raw[b] = b < len ? static_cast<std::uint8_t>(rng.next()) : 0;
    const NodeId id(raw);
    ASSERT_EQ(NodeId::parse(id.to_string()), id) << id.to_string();
  }
}

// ---------------------------------------------------------------------------

TEST(Genesis, Factories) {
  EXPECT_EQ(GenesisDescriptor::ba("t", {node("a")}).kind(), ConsensusKind::BA);
  EXPECT_EQ(GenesisDescriptor::pow("t").kind(), ConsensusKind::PoW);
  EXPECT_EQ(GenesisDescriptor::pos("t", {{node("a"), 1}}).kind(), ConsensusKind::PoS);
  EXPECT_EQ(GenesisDescriptor().kind(), ConsensusKind::PoW);
}

TEST(Genesis, Invariants) {
  expect_code(ErrorCode::InvalidGenesis, [] { GenesisDescriptor::ba("t", {}); });
  expect_code(ErrorCode::InvalidGenesis, [] { GenesisDescriptor::ba("t", {node("a"), node("a")}); });
  expect_code(ErrorCode::InvalidGenesis, [] { GenesisDescriptor::pos("t", {{node("a"), 0}}); });
  expect_code(ErrorCode::InvalidGenesis, [] { GenesisDescriptor::pos("t", {}); });
}

TEST(AppendRecord, NormalizesSignerOrder) {
  const AppendRecord a(Digest::zero(), BaEvidence{{node("b"), node("a")}});
  const AppendRecord b(Digest::zero(), BaEvidence{{node("a"), node("b")}});
  EXPECT_EQ(a, b);
}

TEST(AppendRecord, RejectsMalformedEvidence) {
  expect_code(ErrorCode::InvalidEvidence, [] { AppendRecord(Digest::zero(), BaEvidence{{node("a"), node("a")}}); });
  expect_code(ErrorCode::InvalidEvidence, [] { AppendRecord(Digest::zero(), PowEvidence{0, node("a")}); });
  expect_code(ErrorCode::InvalidEvidence, [] {
    AppendRecord(Digest::zero(), PosEvidence{{}, {Transfer{node("a"), node("b"), 0}}});
  });
}

// ---------------------------------------------------------------------------

TEST(LedgerState, AppendAndPrefix) {
  const LedgerState s0(GenesisDescriptor::pow("x"));
  const auto s1 = s0.append(pow_record("r1"));
  EXPECT_EQ(s0.size(), 0u);
  EXPECT_EQ(s1.size(), 1u);
  EXPECT_TRUE(is_prefix(s0, s1));
  EXPECT_FALSE(is_prefix(s1, s0));
}

TEST(LedgerState, KindMismatchIsRejected) {
  const LedgerState s(GenesisDescriptor::ba("x", {node("a")}));
  expect_code(ErrorCode::EvidenceKindMismatch, [&] { s.append(pow_record("r")); });
}

TEST(LedgerState, Truncate) {
  LedgerState s(GenesisDescriptor::pow("x"));
  for (int i = 0; i < 5; ++i) s = s.append(pow_record("r" + std::to_string(i)));
  EXPECT_EQ(truncate(s, 2).size(), 3u);
  EXPECT_EQ(truncate(s, 0), s);
  EXPECT_EQ(truncate(s, 7), LedgerState(s.genesis_ptr()));
  EXPECT_EQ(truncate(s, 2).back(), pow_record("r2"));
}

TEST(LedgerState, IsPrefixAcrossGenesisThrows) {
  const LedgerState a(GenesisDescriptor::pow("x"));
  const LedgerState b(GenesisDescriptor::pow("y"));
  expect_code(ErrorCode::GenesisMismatch, [&] { is_prefix(a, b); });
}

TEST(LedgerState, EqualityIgnoresSharing) {
  const auto g = GenesisDescriptor::pow("x");
  const auto a = LedgerState(g).append(pow_record("r"));
  const auto b = LedgerState(g).append(pow_record("r"));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, LedgerState(g).append(pow_record("s")));
}

TEST(LedgerState, RecordAccessMatchesView) {
  SeededRng rng(5);
  const auto s = testing::random_state(rng, GenesisDescriptor::pow("x"), 40);
  const auto view = s.record_view();
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.record(i), *view[i]);
}

TEST(LedgerState, LongChainsDestroyWithoutRecursion) {
  LedgerState s(GenesisDescriptor::pow("x"));
  for (int i = 0; i < 200000; ++i) s = s.append(AppendRecord(Digest::zero(), PowEvidence{1, node("p")}));
  EXPECT_EQ(s.size(), 200000u);
  EXPECT_EQ(s.prefix(123456).size(), 123456u);
}

// ---------------------------------------------------------------------------

TEST(LocalStateBag, OneClaimPerNodeLastWins) {
  const auto g = GenesisDescriptor::pow("x");
  const LedgerState s0(g);
  const auto s1 = s0.append(pow_record("r"));
  LocalStateBag bag;
  bag.insert(node("b"), s0);
  bag.insert(node("a"), s0);
  bag.insert(node("b"), s1);
  ASSERT_EQ(bag.size(), 2u);
  EXPECT_EQ(bag.entries()[0].node, node("a"));
  EXPECT_EQ(*bag.find(node("b")), s1);
  EXPECT_EQ(bag.find(node("c")), nullptr);
}

TEST(LocalStateBag, RejectsMixedGenesis) {
  LocalStateBag bag;
  bag.insert(node("a"), LedgerState(GenesisDescriptor::pow("x")));
  expect_code(ErrorCode::GenesisMismatch, [&] { bag.insert(node("b"), LedgerState(GenesisDescriptor::pow("y"))); });
}

TEST(LocalStateBag, SelectAndEquality) {
  const LedgerState s(GenesisDescriptor::pow("x"));
  LocalStateBag bag;
  for (const auto& id : testing::nodes("n", 4)) bag.insert(id, s);
  EXPECT_EQ(bag.select(0b1010).size(), 2u);
  EXPECT_TRUE(bag_equal(bag.select(0b1111), bag));
  EXPECT_FALSE(bag_equal(bag.select(0b0111), bag));
}

// ---------------------------------------------------------------------------
// Properties

TEST(PrefixOrder, Reflexive) {
  SeededRng rng(101);
  for (int i = 0; i < kCases; ++i) {
    const auto s = testing::random_state(rng);
    ASSERT_TRUE(is_prefix(s, s));
  }
}

TEST(PrefixOrder, Antisymmetric) {
  SeededRng rng(102);
  for (int i = 0; i < kCases; ++i) {
    const auto g = testing::random_genesis(rng, testing::random_kind(rng));
    const auto base = testing::random_state(rng, g, 6);
    // Related pairs half the time, independent pairs otherwise.
    const auto a = testing::extend(rng, base, rng.below(3));
    const auto b = rng.bernoulli(0.5) ? testing::extend(rng, base, rng.below(3)) : a;
    if (is_prefix(a, b) && is_prefix(b, a)) {
      ASSERT_EQ(a, b);
      ASSERT_EQ(canonical_bytes(a), canonical_bytes(b));
    }
  }
}

TEST(PrefixOrder, Transitive) {
  SeededRng rng(103);
  for (int i = 0; i < kCases; ++i) {
    const auto a = testing::random_state(rng, 8);
    const auto b = testing::extend(rng, a, rng.below(4));
    const auto c = testing::extend(rng, b, rng.below(4));
    ASSERT_TRUE(is_prefix(a, b));
    ASSERT_TRUE(is_prefix(b, c));
    ASSERT_TRUE(is_prefix(a, c));
  }
}

TEST(PrefixOrder, DivergentBranchesAreIncomparable) {
  SeededRng rng(104);
  const auto g = GenesisDescriptor::pow("x");
  for (int i = 0; i < kCases; ++i) {
    const auto base = testing::random_state(rng, g, 6);
    const auto a = base.append(pow_record("left" + std::to_string(i)));
    const auto b = base.append(pow_record("right" + std::to_string(i)));
    ASSERT_FALSE(is_prefix(a, b));
    ASSERT_FALSE(is_prefix(b, a));
  }
}

TEST(Truncation, ComposesAdditively) {
  SeededRng rng(105);
  for (int i = 0; i < kCases; ++i) {
    const auto s = testing::random_state(rng, 16);
    const auto j = rng.below(20);
    const auto k = rng.below(20);
    ASSERT_EQ(truncate(truncate(s, j), k), truncate(s, j + k));
  }
}

TEST(Truncation, IsPrefixWithExactLength) {
  SeededRng rng(106);
  for (int i = 0; i < kCases; ++i) {
    const auto s = testing::random_state(rng, 16);
    const auto k = rng.below(20);
    const auto t = truncate(s, k);
    ASSERT_TRUE(is_prefix(t, s));
    ASSERT_EQ(t.size(), k >= s.size() ? 0 : s.size() - k);
    // Appending the removed records restores s.
    auto rebuilt = t;
    for (std::size_t r = t.size(); r < s.size(); ++r) rebuilt = rebuilt.append(s.record(r));
    ASSERT_EQ(rebuilt, s);
  }
}

}  // namespace
}  // namespace sdlt
