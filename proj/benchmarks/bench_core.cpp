#include <benchmark/benchmark.h>

#include "sdlt/codec.hpp"
#include "sdlt/harness.hpp"
#include "sdlt/resolvers.hpp"

namespace {

using namespace sdlt;

LedgerState pow_chain(std::size_t n) {
  LedgerState s(GenesisDescriptor::pow("bench"));
  const auto miner = NodeId::from_label("m");
  for (std::size_t i = 0; i < n; ++i) s = s.append(AppendRecord(Digest::of(std::to_string(i)), PowEvidence{1, miner}));
  return s;
}

void BM_Append(benchmark::State& state) {
  const auto base = pow_chain(static_cast<std::size_t>(state.range(0)));
  const AppendRecord r(Digest::zero(), PowEvidence{1, NodeId::from_label("m")});
  for (auto _ : state) benchmark::DoNotOptimize(base.append(r));
}
BENCHMARK(BM_Append)->Arg(10)->Arg(10000);

void BM_IsPrefix(benchmark::State& state) {
  const auto s = pow_chain(static_cast<std::size_t>(state.range(0)));
  const auto half = s.prefix(s.size() / 2);
  for (auto _ : state) benchmark::DoNotOptimize(is_prefix(half, s));
}
BENCHMARK(BM_IsPrefix)->Arg(100)->Arg(10000);

void BM_CanonicalBytes(benchmark::State& state) {
  const auto s = pow_chain(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(canonical_bytes(s));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * canonical_bytes(s).size()));
}
BENCHMARK(BM_CanonicalBytes)->Arg(100)->Arg(1000);

void BM_ResolveBa(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<NodeId> committee;
  for (std::size_t i = 0; i < n; ++i) committee.push_back(NodeId::from_label("c" + std::to_string(i)));
  LedgerState s(GenesisDescriptor::ba("bench", committee));
  EventBatch e;
  e.payload = "E";
  s = step_ba(s, committee, {}, e);
  LocalStateBag bag;
  for (const auto& id : committee) bag.insert(id, s);
  for (auto _ : state) benchmark::DoNotOptimize(resolve_ba(s.genesis(), bag));
}
BENCHMARK(BM_ResolveBa)->Arg(4)->Arg(64);

void BM_RunScenarioPow(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.consensus = ConsensusKind::PoW;
  cfg.horizon = static_cast<std::size_t>(state.range(0));
  cfg.genesis = GenesisDescriptor::pow("bench");
  cfg.roster = {{NodeId::from_label("H"), true, 0.7, {}}, {NodeId::from_label("Z"), false, 0.3, {}}};
  cfg.events = default_events(cfg.horizon);
  cfg.adversary = PrivateMine{2, 10};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = ++seed;
    benchmark::DoNotOptimize(run_scenario(cfg));
  }
}
BENCHMARK(BM_RunScenarioPow)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
