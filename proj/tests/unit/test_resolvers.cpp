#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"
#include "sdlt/adversary.hpp"
#include "sdlt/codec.hpp"
#include "sdlt/error.hpp"
#include "sdlt/resolvers.hpp"

namespace sdlt {
namespace {

using testing::node;
using testing::nodes;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

EventBatch batch(std::uint64_t t) {
  EventBatch e;
  e.time = t;
  e.payload = "E" + std::to_string(t);
  return e;
}

LedgerState ba_chain(const std::vector<NodeId>& c, int length) {
  LedgerState s(GenesisDescriptor::ba("x", c));
  for (int t = 0; t < length; ++t) s = step_ba(s, c, {}, batch(t));
  return s;
}

// ---------------------------------------------------------------------------
// resolve_ba

TEST(ResolveBa, StrictMajority) {
  const auto c = nodes("c", 4);
  const auto s = ba_chain(c, 2);
  const auto forged = forge_ba_state(s, {c[3]}, 1, 0);
  LocalStateBag bag;
  for (int i = 0; i < 3; ++i) bag.insert(c[i], s);
  bag.insert(c[3], forged);
  EXPECT_TRUE(resolve_ba(s.genesis(), bag).matches(s));

  LocalStateBag split;
  split.insert(c[0], s);
  split.insert(c[1], s);
  split.insert(c[2], forged);
  split.insert(c[3], forged);
  EXPECT_TRUE(resolve_ba(s.genesis(), split).is_bottom());
  EXPECT_TRUE(resolve_ba(s.genesis(), LocalStateBag{}).is_bottom());
}

TEST(ResolveBa, IgnoresOutsiders) {
  const auto c = nodes("c", 3);
  const auto s = ba_chain(c, 1);
  const auto other = ba_chain(c, 2);
  LocalStateBag bag;
  bag.insert(c[0], s);
  for (const auto& id : nodes("o", 5)) bag.insert(id, other);
  EXPECT_TRUE(resolve_ba(s.genesis(), bag).is_bottom());
  bag.insert(c[1], s);
  EXPECT_TRUE(resolve_ba(s.genesis(), bag).matches(s));
}

TEST(ResolveBa, NeedsBaGenesis) {
  EXPECT_EQ(code_of([] { resolve_ba(GenesisDescriptor::pow("x"), LocalStateBag{}); }), ErrorCode::NotBaGenesis);
}

TEST(ResolveBa, InsertionOrderDoesNotMatter) {
  SeededRng rng(501);
  for (int i = 0; i < 1000; ++i) {
    const auto c = nodes("c", 1 + rng.below(7));
    const auto s = ba_chain(c, 1 + static_cast<int>(rng.below(3)));
    std::vector<std::pair<NodeId, LedgerState>> claims;
    for (const auto& id : c) {
      claims.emplace_back(id, rng.bernoulli(0.6) ? s : forge_ba_state(s, {id}, 1, rng.below(2)));
    }
    LocalStateBag forward;
    for (const auto& [id, st] : claims) forward.insert(id, st);
    for (std::size_t j = claims.size(); j > 1; --j) std::swap(claims[j - 1], claims[rng.below(j)]);
    LocalStateBag shuffled;
    for (const auto& [id, st] : claims) shuffled.insert(id, st);
    ASSERT_EQ(resolve_ba(s.genesis(), forward), resolve_ba(s.genesis(), shuffled));
  }
}

// With a Byzantine minority, every subset of the claims resolves to the
// truth or to Bottom, and adding an honest claim never turns a truthful
// answer into Bottom.
TEST(ResolveBa, MinoritySubsetsAreSafeAndMonotone) {
  SeededRng rng(502);
  for (int i = 0; i < 1000; ++i) {
    const auto n = 1 + rng.below(7);
    const auto c = nodes("c", n);
    const auto s = ba_chain(c, 1 + static_cast<int>(rng.below(3)));
    std::set<NodeId> byz;
    while (2 * (byz.size() + 1) < n && rng.bernoulli(0.7)) byz.insert(c[rng.below(n)]);
    std::map<NodeId, LedgerState> forgeries;
    for (const auto& b : byz) forgeries.emplace(b, forge_ba_state(truncate(s, rng.below(2)), byz, 1 + rng.below(2), rng.below(2)));
    const auto bag = fabricate_ba_bag(s, c, byz, forgeries);
    const auto mask = rng.next() & ((std::uint64_t{1} << n) - 1);
    const auto sub = bag.select(mask);
    const auto out = resolve_ba(s.genesis(), sub);
    ASSERT_TRUE(out.is_bottom() || out.matches(s));
    // Independent count of honest claims in the subset.
    std::size_t honest = 0;
    for (const auto& e : sub.entries()) honest += !byz.contains(e.node);
    ASSERT_EQ(out.matches(s), 2 * honest > n);
    for (std::size_t b = 0; b < n; ++b) {
      if (mask >> b & 1 || byz.contains(bag.entries()[b].node)) continue;
      const auto grown = resolve_ba(s.genesis(), bag.select(mask | std::uint64_t{1} << b));
      if (out.matches(s)) ASSERT_TRUE(grown.matches(s));
    }
  }
}

// ---------------------------------------------------------------------------
// resolve_pow

TEST(ResolvePow, HeaviestWins) {
  const auto g = GenesisDescriptor::pow("x");
  const auto light = LedgerState(g).append(AppendRecord(Digest::of("a"), PowEvidence{1, node("m")}));
  const auto heavy = light.append(AppendRecord(Digest::of("b"), PowEvidence{1, node("m")}));
  LocalStateBag bag;
  bag.insert(node("a"), light);
  bag.insert(node("b"), heavy);
  EXPECT_TRUE(resolve_pow(g, bag).matches(heavy));
  EXPECT_TRUE(resolve_pow(g, LocalStateBag{}).is_bottom());
}

TEST(ResolvePow, RejectsOtherEvidence) {
  const auto g = GenesisDescriptor::ba("x", {node("a")});
  LocalStateBag bag;
  bag.insert(node("a"), LedgerState(g));
  EXPECT_EQ(code_of([&] { resolve_pow(g, bag); }), ErrorCode::EvidenceKindMismatch);
}

TEST(ResolvePow, MatchesIndependentArgmax) {
  SeededRng rng(503);
  const auto g = GenesisDescriptor::pow("x");
  for (int i = 0; i < 1000; ++i) {
    LocalStateBag bag;
    const auto base = testing::random_state(rng, g, 4);
    const auto n = 1 + rng.below(6);
    for (std::uint64_t j = 0; j < n; ++j) bag.insert(node("n" + std::to_string(j)), testing::extend(rng, base, rng.below(3)));
    // Oracle: sum the work by hand, ties to the lexicographically smaller bytes.
    const LedgerState* best = nullptr;
    std::uint64_t best_work = 0;
    Bytes best_bytes;
    for (const auto& e : bag.entries()) {
      std::uint64_t work = 0;
      for (const auto* r : e.state.record_view()) work += std::get<PowEvidence>(r->evidence()).work;
      auto bytes = canonical_bytes(e.state);
      if (!best || work > best_work || (work == best_work && bytes < best_bytes)) {
        best = &e.state;
        best_work = work;
        best_bytes = std::move(bytes);
      }
    }
    ASSERT_TRUE(resolve_pow(g, bag).matches(*best));
  }
}

// ---------------------------------------------------------------------------
// check_weak / check_strong

Trace ba_trace(std::size_t committee, std::size_t byzantine, std::size_t horizon, std::size_t pool = 1) {
  ScenarioConfig cfg;
  cfg.consensus = ConsensusKind::BA;
  cfg.horizon = horizon;
  cfg.genesis = GenesisDescriptor::ba("x", nodes("c", committee));
  for (std::size_t i = 0; i < committee; ++i) cfg.roster.push_back({node("c" + std::to_string(i)), i >= byzantine, 0, {}});
  cfg.events = default_events(horizon);
  cfg.adversary = BaForge{pool, 1, {}, true};
  return run_scenario(cfg);
}

TEST(CheckStrong, EnumeratesEverySubset) {
  const auto trace = ba_trace(5, 2, 2);
  const auto report = check_strong(resolve_ba, trace);
  EXPECT_TRUE(report.passed);
  EXPECT_TRUE(report.exhaustive);
  EXPECT_EQ(report.max_bag_size, 5u);
  EXPECT_EQ(report.subsets_checked, 3u * 32u);
  for (std::size_t size = 0; size <= 5; ++size) {
    const auto& cls = report.by_size.at(size);
    EXPECT_EQ(cls.truth + cls.bottom + cls.wrong, 3 * static_cast<std::uint64_t>(std::llround(testing::binomial(5, size)))) << size;
    EXPECT_EQ(cls.wrong, 0u);
  }
}

TEST(CheckStrong, ColludingHalfIsCaught) {
  const auto trace = ba_trace(4, 2, 2);
  const auto report = check_strong(resolve_ba, trace);
  EXPECT_FALSE(report.passed);
  EXPECT_FALSE(report.weak.passed);
  EXPECT_EQ(report.weak.failing_step, std::optional<std::size_t>(0));
  EXPECT_TRUE(report.weak.observed->is_bottom());
  // Two forgers out of four never reach a strict majority on their own.
  EXPECT_FALSE(report.counterexample.has_value());
}

TEST(CheckStrong, ByzantineMajorityResolvesWrong) {
  ScenarioConfig cfg;
  cfg.consensus = ConsensusKind::BA;
  cfg.horizon = 1;
  cfg.genesis = GenesisDescriptor::ba("x", nodes("c", 3));
  for (std::size_t i = 0; i < 3; ++i) cfg.roster.push_back({node("c" + std::to_string(i)), i == 0, 0, {}});
  cfg.events = default_events(1);
  cfg.adversary = BaForge{1, 1, {}, true};
  const auto report = check_strong(resolve_ba, run_scenario(cfg));
  ASSERT_TRUE(report.counterexample.has_value());
  EXPECT_FALSE(report.counterexample->observed.is_bottom());
  EXPECT_FALSE(report.counterexample->observed.matches(run_scenario(cfg).states[report.counterexample->step]));
}

TEST(CheckStrong, SingletonForgeryGivesBottom) {
  const auto c = nodes("c", 3);
  const auto s = ba_chain(c, 1);
  LocalStateBag one;
  one.insert(c[2], forge_ba_state(s, {c[2]}, 1, 0));
  EXPECT_TRUE(resolve_ba(s.genesis(), one).is_bottom());
}

TEST(CheckStrong, SamplesLargeBags) {
  const auto trace = ba_trace(9, 4, 1);
  const auto report = check_strong(resolve_ba, trace, 64, 3);
  EXPECT_FALSE(report.exhaustive);
  EXPECT_EQ(report.subsets_checked, 2u * 64u);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(code_of([&] { check_strong(resolve_ba, trace, 0); }), ErrorCode::InvalidArgument);
}

TEST(CheckWeak, FlagsFirstFailingStep) {
  Trace trace = ba_trace(4, 1, 3);
  EXPECT_TRUE(check_weak(resolve_ba, trace).passed);
  trace.bags[2] = LocalStateBag{};
  const auto report = check_weak(resolve_ba, trace);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.failing_step, std::optional<std::size_t>(2));
  EXPECT_TRUE(report.observed->is_bottom());
}

// ---------------------------------------------------------------------------
// check_probabilistic

ScenarioGenerator pow_generator(double p, std::size_t horizon) {
  return [=](std::uint64_t k, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.consensus = ConsensusKind::PoW;
    cfg.horizon = horizon;
    cfg.seed = seed;
    cfg.genesis = GenesisDescriptor::pow("x");
    cfg.roster = {{node("H"), true, p, {}}, {node("Z"), false, 1 - p, {}}};
    cfg.events = default_events(horizon);
    cfg.adversary = PrivateMine{k, k + 1};
    return cfg;
  };
}

TEST(CheckProbabilistic, TracksCatchupProbability) {
  constexpr std::uint64_t n = 4000;
  const auto report = check_probabilistic(resolve_pow, pow_generator(0.7, 120), {1, 2, 3}, 0, std::nullopt, n, 11);
  EXPECT_NEAR(report.lambda, 0.21, 1e-12);
  ASSERT_EQ(report.rows.size(), 3u);
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.trials, n);
    EXPECT_NEAR(row.oracle, std::pow(3.0 / 7.0, row.k), 1e-12);
    EXPECT_NEAR(row.bound, std::pow(0.84, row.k), 1e-12);
    EXPECT_LE(row.failure_rate, row.bound + 3 * row.stderr_);
    EXPECT_NEAR(row.failure_rate, row.oracle, 3 * testing::binomial_sigma(row.oracle, n)) << "k=" << row.k;
  }
}

TEST(CheckProbabilistic, DeterministicAcrossThreads) {
  const auto a = check_probabilistic(resolve_pow, pow_generator(0.7, 40), {1, 2}, 0, std::nullopt, 300, 5, 1);
  const auto b = check_probabilistic(resolve_pow, pow_generator(0.7, 40), {1, 2}, 0, std::nullopt, 300, 5, 3);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].failures, b.rows[i].failures);
}

TEST(CheckProbabilistic, SingleTrialIsNotMeaningful) {
  const auto r = check_probabilistic(resolve_pow, pow_generator(0.7, 10), {1}, 0, std::nullopt, 1, 5);
  EXPECT_FALSE(r.rows[0].meaningful);
}

TEST(CheckProbabilistic, RejectsBalancedPower) {
  EXPECT_EQ(code_of([] { check_probabilistic(resolve_pow, pow_generator(0.5, 10), {1}, 0, std::nullopt, 10, 1); }),
            ErrorCode::InvalidConfiguration);
}

// ---------------------------------------------------------------------------
// PoS falsification

ScenarioConfig two_party(std::size_t horizon) {
  ScenarioConfig cfg;
  cfg.consensus = ConsensusKind::PoS;
  cfg.horizon = horizon;
  cfg.genesis = GenesisDescriptor::pos("x", {{node("m"), 100}});
  cfg.roster = {{node("m"), false, 0, {}}, {node("h"), true, 0, {}}};
  for (std::size_t t = 0; t < horizon; ++t) cfg.events.push_back(batch(t));
  if (horizon > 0) cfg.events[0].transfers = {{node("m"), node("h"), 60}};
  return cfg;
}

TEST(FalsifyPos, TwoStakeholdersGiveWitness) {
  const auto w = falsify_pos_statelessness(two_party(3));
  EXPECT_TRUE(w.produced) << w.verdict;
  EXPECT_TRUE(w.bags_equal);
  EXPECT_FALSE(w.truths_equal);
  EXPECT_EQ(w.steps, 3u);
  EXPECT_NE(canonical_bytes(w.world_a.states.back()), canonical_bytes(w.world_b.states.back()));
  EXPECT_TRUE(bag_equal(w.world_a.bags.back(), w.world_b.bags.back()));
}

TEST(FalsifyPos, DegenerateAndHonestless) {
  const auto zero = falsify_pos_statelessness(two_party(0));
  EXPECT_FALSE(zero.produced);
  EXPECT_NE(zero.verdict.find("degenerate"), std::string::npos);

  auto all_bad = two_party(2);
  all_bad.roster[1].honest = false;
  const auto none = falsify_pos_statelessness(all_bad);
  EXPECT_FALSE(none.produced);
  EXPECT_NE(none.verdict.find("no honest stakeholder"), std::string::npos);
}

TEST(FalsifyPos, RandomScenarios) {
  SeededRng rng(504);
  for (int i = 0; i < 200; ++i) {
    const auto cfg = testing::random_pos_scenario(rng, 2 + rng.below(4), 1 + rng.below(6));
    const auto w = falsify_pos_statelessness(cfg);
    ASSERT_TRUE(w.produced) << w.verdict;
    ASSERT_TRUE(bag_equal(w.world_a.bags.back(), w.world_b.bags.back()));
    ASSERT_NE(canonical_bytes(w.world_a.states.back()), canonical_bytes(w.world_b.states.back()));
  }
}

}  // namespace
}  // namespace sdlt
