#include "sdlt/resolvers.hpp"

#include <algorithm>
#include <bit>

#include "sdlt/codec.hpp"
#include "sdlt/error.hpp"
#include "sdlt/json_io.hpp"
#include "sdlt/rng.hpp"

namespace sdlt {

ResolutionOutcome resolve_ba(const GenesisDescriptor& genesis, const LocalStateBag& bag) {
  const auto& committee = genesis.ba_committee();
  if (!committee) throw Error(ErrorCode::NotBaGenesis, "resolve_ba needs a BA genesis");

  // Claims grouped by state; the bag holds one claim per node, so counts are
  // counts of distinct members.
  std::vector<std::pair<const LedgerState*, std::size_t>> groups;
  for (const auto& e : bag.entries()) {
    if (std::find(committee->begin(), committee->end(), e.node) == committee->end()) continue;
    if (!(e.state.genesis() == genesis)) continue;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return *g.first == e.state; });
    if (it == groups.end()) {
      groups.emplace_back(&e.state, 1);
    } else {
      ++it->second;
    }
  }
  for (const auto& [state, count] : groups) {
    if (2 * count > committee->size()) return ResolutionOutcome::of(*state);
  }
  return ResolutionOutcome::bottom();
}

ResolutionOutcome resolve_pow(const GenesisDescriptor& genesis, const LocalStateBag& bag) {
  const LedgerState* best = nullptr;
  for (const auto& e : bag.entries()) {
    if (e.state.genesis().kind() != ConsensusKind::PoW) {
      throw Error(ErrorCode::EvidenceKindMismatch, "resolve_pow on a non-PoW claim");
    }
    if (!(e.state.genesis() == genesis)) continue;
    if (best == nullptr || pow_prefers(e.state, *best)) best = &e.state;
  }
  return best ? ResolutionOutcome::of(*best) : ResolutionOutcome::bottom();
}

WeakReport check_weak(const Resolver& resolver, const Trace& trace) {
  WeakReport report;
  const auto& genesis = trace.states.front().genesis();
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    auto out = resolver(genesis, trace.bags[t]);
    if (!out.matches(trace.states[t])) {
      report.passed = false;
      report.failing_step = t;
      report.observed = std::move(out);
      return report;
    }
  }
  return report;
}

StrongReport check_strong(const Resolver& resolver, const Trace& trace, std::uint64_t subset_budget,
                          std::uint64_t seed) {
  if (subset_budget == 0) throw Error(ErrorCode::InvalidArgument, "subset budget must be positive");
  StrongReport report;
  report.weak = check_weak(resolver, trace);
  report.passed = report.weak.passed;
  const auto& genesis = trace.states.front().genesis();
  SeededRng rng(seed);

  auto visit = [&](std::size_t t, const LocalStateBag& subset) {
    ++report.subsets_checked;
    auto out = resolver(genesis, subset);
    auto& cls = report.by_size[subset.size()];
    if (out.is_bottom()) {
      ++cls.bottom;
    } else if (out.value() == trace.states[t]) {
      ++cls.truth;
    } else {
      ++cls.wrong;
      report.passed = false;
      if (!report.counterexample) report.counterexample = StrongCounterexample{t, subset, std::move(out)};
    }
  };

  for (std::size_t t = 0; t < trace.bags.size(); ++t) {
    const auto& bag = trace.bags[t];
    const std::size_t n = bag.size();
    report.max_bag_size = std::max(report.max_bag_size, n);
    // 2^n <= budget, i.e. n <= floor(log2(budget)).
    const bool exhaustive = n < 64 && n <= static_cast<std::size_t>(std::bit_width(subset_budget) - 1);
    if (exhaustive) {
      const std::uint64_t count = std::uint64_t{1} << n;
      for (std::uint64_t mask = 0; mask < count; ++mask) visit(t, bag.select(mask));
    } else {
      report.exhaustive = false;
      std::vector<bool> keep(n);
      for (std::uint64_t i = 0; i < subset_budget; ++i) {
        for (std::size_t b = 0; b < n; ++b) keep[b] = rng.next() >> 63;
        visit(t, bag.select(keep));
      }
    }
  }
  return report;
}

namespace {

struct Shares {
  double lambda = 0.0;
  double p = 0.0;
  double q = 0.0;
};

Shares scan_shares(const ScenarioConfig& config) {
  if (config.consensus != ConsensusKind::PoW) {
    throw Error(ErrorCode::InvalidConfiguration, "probabilistic check needs a PoW scenario");
  }
  Shares s;
  bool first = true;
  for (std::size_t t = 0; t < config.horizon; ++t) {
    double p = 0.0, q = 0.0;
    for (const auto& n : config.roster) {
      if (n.online_at(t)) (n.honest ? p : q) += n.power;
    }
    if (!(p > q)) {
      throw Error(ErrorCode::InvalidConfiguration,
                  "hypothesis p>q violated at step " + std::to_string(t) + " (p=" + std::to_string(p) +
                      ", q=" + std::to_string(q) + ")");
    }
    if (first || p * q > s.lambda) {
      s = Shares{p * q, p, q};
      first = false;
    }
  }
  return s;
}

}  // namespace

ProbabilisticReport check_probabilistic(const Resolver& resolver, const ScenarioGenerator& generator,
                                        const std::vector<std::uint64_t>& k_values, std::uint64_t t,
                                        std::optional<std::uint64_t> t_prime, std::uint64_t trials,
                                        std::uint64_t master_seed, unsigned threads) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
  if (t_prime && *t_prime < t) throw Error(ErrorCode::InvalidArgument, "t' must not precede t");
  ProbabilisticReport report;
  bool first = true;
  for (auto k : k_values) {
    // Shares depend on roster and schedule only, not on the seed.
    const auto shares = scan_shares(generator(k, derive_seed(master_seed, 0)));
    if (first || shares.lambda > report.lambda) {
      report.lambda = shares.lambda;
      report.p = shares.p;
      report.q = shares.q;
      first = false;
    }
  }

  for (auto k : k_values) {
    const auto digest = config_digest(generator(k, derive_seed(master_seed, 0)));
    const auto sink = parallel_trials(trials, threads, [&](std::uint64_t i, MetricSink& out) {
      const auto trace = run_scenario(generator(k, derive_seed(master_seed, i)), digest);
      const std::size_t last = trace.states.size() - 1;
      const std::size_t end = t_prime ? std::min<std::size_t>(*t_prime, last) : last;
      const auto& genesis = trace.states.front().genesis();
      bool failed = false;
      for (std::size_t tau = t; tau <= end && !failed; ++tau) {
        const auto resolved = resolver(genesis, trace.bags[tau]);
        failed = resolved.is_bottom() || !is_prefix(truncate(resolved.value(), k), trace.states[end]);
      }
      out.observe("failure", k, failed ? 1.0 : 0.0);
    });
    const auto& tally = sink.tallies().begin()->second;
    const auto summary = summarize(MetricKey{"failure", k}, tally);
    ProbabilisticRow row;
    row.k = k;
    row.trials = tally.n;
    row.failures = static_cast<std::uint64_t>(tally.sum);
    row.failure_rate = summary.mean;
    row.stderr_ = summary.stderr_;
    row.ci99 = summary.ci99;
    row.meaningful = summary.meaningful;
    row.bound = statelessness_bound(report.lambda, k);
    // Without Byzantine power there is nothing to catch up with.
    row.oracle = report.q > 0.0 ? catchup_oracle(report.p, report.q, k) : (k == 0 ? 1.0 : 0.0);
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------

PosWitness falsify_pos_statelessness(const ScenarioConfig& scenario, const std::vector<NodeId>& pool) {
  if (scenario.consensus != ConsensusKind::PoS) {
    throw Error(ErrorCode::InvalidScenario, "the mirror construction needs a PoS scenario");
  }
  PosWitness w;
  w.steps = scenario.horizon;
  const bool any_honest = std::any_of(scenario.roster.begin(), scenario.roster.end(),
                                      [](const NodeProfile& n) { return n.honest; });
  if (!any_honest) {
    w.verdict = "no honest stakeholder to mirror";
    return w;
  }
  if (scenario.horizon == 0) {
    w.verdict = "degenerate: no appends, not falsified at t=0";
    return w;
  }

  ScenarioConfig a = scenario;
  a.adversary = LongRange{pool};
  w.map = mirror_network(a.roster, pool);

  // World B: the pool ids are the honest nodes and the original honest ids
  // are the adversary's copies of them.
  ScenarioConfig b = scenario;
  for (auto& n : b.roster) n.id = w.map.relabel(n.id);
  for (auto& e : b.events) e = relabel(e, w.map);
  std::vector<NodeId> b_honest;
  for (const auto& n : b.roster) {
    if (n.honest) b_honest.push_back(n.id);
  }
  std::sort(b_honest.begin(), b_honest.end());
  const auto inverse = w.map.inverse();
  std::vector<NodeId> b_pool;
  for (const auto& id : b_honest) b_pool.push_back(inverse.at(id));
  b.adversary = LongRange{b_pool};

  w.world_a = run_scenario(a);
  w.world_b = run_scenario(b);

  const std::size_t t = scenario.horizon;
  w.bags_equal = bag_equal(w.world_a.bags[t], w.world_b.bags[t]);
  w.truths_equal = canonical_bytes(w.world_a.states[t]) == canonical_bytes(w.world_b.states[t]);
  w.produced = w.bags_equal && !w.truths_equal;
  if (w.produced) {
    w.verdict = "witness: bags equal, truths differ at t=" + std::to_string(t);
  } else if (w.truths_equal) {
    w.verdict = "no honest stakeholder to mirror: honest ids never appear in the history";
  } else {
    w.verdict = "bags differ at t=" + std::to_string(t);
  }
  return w;
}

PosWitness falsify_pos_statelessness(const ScenarioConfig& scenario) {
  std::vector<NodeId> pool;
  for (const auto& n : scenario.roster) {
    if (n.honest) pool.push_back(NodeId::from_label("mirror-" + std::to_string(pool.size())));
  }
  return falsify_pos_statelessness(scenario, pool);
}

}  // namespace sdlt
