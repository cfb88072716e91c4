#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdlt/harness.hpp"
#include "sdlt/ledger.hpp"

namespace sdlt {

/// f(I, A): a resolved state, or Bottom when the bag does not decide.
class ResolutionOutcome {
 public:
  static ResolutionOutcome bottom() { return ResolutionOutcome(); }
  static ResolutionOutcome of(LedgerState s) { return ResolutionOutcome(std::move(s)); }

  bool is_bottom() const { return !value_; }
  const LedgerState& value() const { return *value_; }

  /// Bottom equals only Bottom; states compare canonically.
  friend bool operator==(const ResolutionOutcome& a, const ResolutionOutcome& b) {
    if (a.is_bottom() || b.is_bottom()) return a.is_bottom() == b.is_bottom();
    return *a.value_ == *b.value_;
  }
  bool matches(const LedgerState& s) const { return value_ && *value_ == s; }

 private:
  ResolutionOutcome() = default;
  explicit ResolutionOutcome(LedgerState s) : value_(std::move(s)) {}
  std::optional<LedgerState> value_;
};

using Resolver = std::function<ResolutionOutcome(const GenesisDescriptor&, const LocalStateBag&)>;

/// The state claimed by strictly more than |C|/2 distinct committee members.
/// Entries from non-committee nodes or with another genesis are ignored.
/// Throws NotBaGenesis.
ResolutionOutcome resolve_ba(const GenesisDescriptor& genesis, const LocalStateBag& bag);

/// Heaviest claimed state, ties to the smaller canonical encoding; Bottom for
/// an empty bag. Throws EvidenceKindMismatch on non-PoW claims.
ResolutionOutcome resolve_pow(const GenesisDescriptor& genesis, const LocalStateBag& bag);

struct WeakReport {
  bool passed = true;
  std::optional<std::size_t> failing_step;
  std::optional<ResolutionOutcome> observed;  // at the failing step
};

/// resolver(I, 𝕊_t) = S_t at every step; Bottom counts as failure.
WeakReport check_weak(const Resolver& resolver, const Trace& trace);

/// Subsets grouped by size: how many resolved to S_t, to Bottom, or to
/// anything else.
struct SubsetClass {
  std::uint64_t truth = 0;
  std::uint64_t bottom = 0;
  std::uint64_t wrong = 0;
};

struct StrongCounterexample {
  std::size_t step = 0;
  LocalStateBag subset;
  ResolutionOutcome observed = ResolutionOutcome::bottom();
};

struct StrongReport {
  bool passed = true;
  WeakReport weak;
  bool exhaustive = true;
  std::uint64_t subsets_checked = 0;
  std::size_t max_bag_size = 0;
  std::map<std::size_t, SubsetClass> by_size;
  std::optional<StrongCounterexample> counterexample;  // first wrong subset
};

/// check_weak plus resolver(I, A) ∈ {S_t, Bottom} for the subsets A of every
/// bag: all 2^|𝕊_t| of them when that is at most `subset_budget`, otherwise
/// `subset_budget` uniform draws (exhaustive = false).
StrongReport check_strong(const Resolver& resolver, const Trace& trace, std::uint64_t subset_budget = 4096,
                          std::uint64_t seed = 0);

struct ProbabilisticRow {
  std::uint64_t k = 0;
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double failure_rate = 0.0;
  double stderr_ = 0.0;
  double ci99 = 0.0;
  double bound = 0.0;   // (4λ)^k
  double oracle = 0.0;  // (q/p)^k
  bool meaningful = true;
};

struct ProbabilisticReport {
  double lambda = 0.0;  // max over events of p·q
  double p = 0.0;       // honest share at the step attaining λ
  double q = 0.0;
  std::vector<ProbabilisticRow> rows;
};

/// Scenario for trial `trial` at truncation depth `k`.
using ScenarioGenerator = std::function<ScenarioConfig(std::uint64_t k, std::uint64_t trial_seed)>;

/// A trial fails at depth k when, for some observed instant τ ∈ [t, t'],
/// truncate(resolver(I, 𝕊_τ), k) is not a prefix of the last observed truth
/// S_{min(t', T)}. Bottom outputs count as failures. Trial i uses seed
/// derive_seed(master_seed, i) at every k.
///
/// Throws InvalidConfiguration if some mining event has p <= q.
ProbabilisticReport check_probabilistic(const Resolver& resolver, const ScenarioGenerator& generator,
                                        const std::vector<std::uint64_t>& k_values, std::uint64_t t,
                                        std::optional<std::uint64_t> t_prime, std::uint64_t trials,
                                        std::uint64_t master_seed, unsigned threads = 0);

/// Result of the two-world construction on a PoS scenario.
struct PosWitness {
  bool produced = false;
  std::string verdict;  // human-readable reason when not produced
  bool bags_equal = false;
  bool truths_equal = true;
  std::size_t steps = 0;
  MirrorMap map;  // world A honest id -> world B id
  Trace world_a;
  Trace world_b;
};

/// World A runs `scenario` with its honest stakeholders mirrored onto
/// `pool`. World B is its mirror image: the pool ids are honest and run the
/// relabeled events, the original honest ids are the adversary's copies.
/// Both joining nodes see equal bags at t = horizon while the truths differ.
PosWitness falsify_pos_statelessness(const ScenarioConfig& scenario, const std::vector<NodeId>& pool);

/// Same, with a pool of fresh ids "mirror-0", "mirror-1", ...
PosWitness falsify_pos_statelessness(const ScenarioConfig& scenario);

}  // namespace sdlt
