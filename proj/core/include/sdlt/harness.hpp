#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdlt/adversary.hpp"
#include "sdlt/consensus.hpp"
#include "sdlt/ledger.hpp"

namespace sdlt {

// ---------------------------------------------------------------------------
// Scenario description

struct NoAdversary {
  friend bool operator==(const NoAdversary&, const NoAdversary&) = default;
};

/// Byzantine nodes claim states drawn from a pool of `pool_size` forgeries.
/// Pool entry j is truncate(S_t, j mod (t+1)) extended by `forged_records`
/// records signed only by the Byzantine committee members.
struct BaForge {
  std::size_t pool_size = 1;
  std::size_t forged_records = 1;
  /// Pool index per Byzantine roster node, in ascending id order. Empty means
  /// all collude on entry 0.
  std::vector<std::size_t> assignment;
  /// Byzantine members still co-sign the agreed records and only lie to
  /// joining nodes. When false they abstain from agreement, and σ_BA reports
  /// QuorumUnavailable once they reach half the committee.
  bool sign_agreed_records = true;
  friend bool operator==(const BaForge&, const BaForge&) = default;
};

/// Once the honest chain reaches `launch` records, the adversary holds one
/// withheld block on truncate(S, lead + 1), so the honest chain leads its
/// branch by `lead` blocks. Byzantine-produced blocks then extend the
/// withheld branch instead of the public chain. Requires launch >= lead + 1.
struct PrivateMine {
  std::size_t lead = 1;
  std::size_t launch = 1;
  friend bool operator==(const PrivateMine&, const PrivateMine&) = default;
};

/// Long-range mirror attack; honest ids are relabeled onto `pool`.
struct LongRange {
  std::vector<NodeId> pool;
  friend bool operator==(const LongRange&, const LongRange&) = default;
};

using AdversaryStrategy = std::variant<NoAdversary, BaForge, PrivateMine, LongRange>;

struct ScenarioConfig {
  ConsensusKind consensus = ConsensusKind::PoW;
  std::size_t horizon = 0;
  std::vector<NodeProfile> roster;
  GenesisDescriptor genesis;
  std::vector<EventBatch> events;  // one batch per step
  AdversaryStrategy adversary;
  std::uint64_t seed = 0;

  /// Throws InvalidScenario when the invariants between fields do not hold.
  void validate() const;
};

/// Events "E<t>" with no transfers, for configs that leave events implicit.
std::vector<EventBatch> default_events(std::size_t horizon);

// ---------------------------------------------------------------------------
// Execution

struct TraceMeta {
  std::uint64_t seed = 0;
  Digest config_digest;
  std::size_t honest_blocks = 0;     // PoW: mining events won by honest nodes
  std::size_t adversary_blocks = 0;  // PoW: events won by Byzantine nodes
};

/// One execution. states[t] is the ground truth S_t after t appends and
/// bags[t] is what a node joining at t observes.
///
/// For PoW the time index counts appends to the honest chain, so under a
/// private-mining adversary several mining events can fall in one instant;
/// bags[t] is taken at the end of instant t. `power_shares` lists (p, q) per
/// mining event.
struct Trace {
  std::vector<LedgerState> states;
  std::vector<LocalStateBag> bags;
  std::vector<LedgerState> adversary_states;  // PoS long-range: S'_t
  std::optional<LedgerState> adversary_branch;  // PoW private branch at the end
  std::vector<std::pair<double, double>> power_shares;
  TraceMeta meta;
};

/// S_0 = I, S_{t+1} = σ(S_t, 𝒩_t, E_t), with the adversary filling in the
/// Byzantine claims. Step errors are rethrown with the step index.
Trace run_scenario(const ScenarioConfig& config);

/// Same, with config_digest(config) supplied by the caller. The digest leaves
/// the seed out, so batch drivers compute it once per base config.
Trace run_scenario(const ScenarioConfig& config, const Digest& digest);

// ---------------------------------------------------------------------------
// Monte Carlo

struct MetricKey {
  std::string name;
  std::optional<std::uint64_t> k;
  friend auto operator<=>(const MetricKey&, const MetricKey&) = default;
};

/// Running sums for one metric; merge() is associative and commutative.
struct Tally {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double value) {
    ++n;
    sum += value;
    sum_sq += value * value;
  }
  void merge(const Tally& other) {
    n += other.n;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
};

class MetricSink {
 public:
  void observe(const std::string& name, double value) { tallies_[MetricKey{name, std::nullopt}].add(value); }
  void observe(const std::string& name, std::uint64_t k, double value) { tallies_[MetricKey{name, k}].add(value); }

  const std::map<MetricKey, Tally>& tallies() const { return tallies_; }
  void merge(const MetricSink& other);

 private:
  std::map<MetricKey, Tally> tallies_;
};

/// Summary of a metric with values in [0, 1]. With fewer than two
/// observations the standard error is the worst case 0.5 / sqrt(n) and
/// `meaningful` is false.
struct MetricSummary {
  MetricKey key;
  std::uint64_t n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double ci99 = 0.0;  // half-width
  bool meaningful = true;
};

MetricSummary summarize(const MetricKey& key, const Tally& tally);

struct Aggregate {
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;
  std::vector<MetricSummary> metrics;  // ordered by key

  const MetricSummary* find(const std::string& name, std::optional<std::uint64_t> k = std::nullopt) const;
};

using Collector = std::function<void(const Trace&, MetricSink&)>;

/// Worker count: `requested` if positive, else SDLT_THREADS if set and
/// positive, else the hardware concurrency.
unsigned resolve_threads(unsigned requested = 0);

/// Runs `trials` copies of `base`, trial i seeded with
/// derive_seed(base.seed, i), and folds every trace through `collector`.
/// Trials are grouped in fixed chunks merged in index order, so the result is
/// identical for any thread count.
Aggregate monte_carlo(const ScenarioConfig& base, std::uint64_t trials, const Collector& collector,
                      unsigned threads = 0);

/// Same scheduling for arbitrary per-trial work.
MetricSink parallel_trials(std::uint64_t trials, unsigned threads,
                           const std::function<void(std::uint64_t trial, MetricSink&)>& body);

// ---------------------------------------------------------------------------
// Reference values

/// (q/p)^k: probability that a random walk stepping +1 w.p. p and -1 w.p. q,
/// started k above zero, ever reaches zero. Needs p + q = 1 and p > q > 0.
double catchup_oracle(double p, double q, std::uint64_t k);

/// (4λ)^k, i.e. e^{-ck} with c = log(1 / (4λ)).
double statelessness_bound(double lambda, std::uint64_t k);

/// z-quantile for a two-sided 99% interval.
inline constexpr double kZ99 = 2.5758293035489004;

}  // namespace sdlt
