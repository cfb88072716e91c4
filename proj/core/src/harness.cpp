#include "sdlt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <set>
#include <thread>

#include "sdlt/error.hpp"
#include "sdlt/json_io.hpp"

namespace sdlt {

namespace {

template <class T>
constexpr bool holds(const AdversaryStrategy& a) {
  return std::holds_alternative<T>(a);
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

std::vector<NodeId> byzantine_ids(const std::vector<NodeProfile>& roster) {
  std::vector<NodeId> out;
  for (const auto& n : roster) {
    if (!n.honest) out.push_back(n.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (events.size() != horizon) {
    invalid(std::to_string(events.size()) + " event batches for horizon " + std::to_string(horizon));
  }
  std::set<NodeId> ids;
  for (const auto& n : roster) {
    if (!ids.insert(n.id).second) invalid("duplicate roster id " + n.id.to_string());
  }
  if (genesis.kind() != consensus) invalid("genesis does not match the consensus kind");

  switch (consensus) {
    case ConsensusKind::BA: {
      for (const auto& id : *genesis.ba_committee()) {
        if (!ids.contains(id)) invalid("committee member " + id.to_string() + " is not in the roster");
      }
      if (holds<PrivateMine>(adversary) || holds<LongRange>(adversary)) invalid("adversary does not apply to BA");
      if (const auto* f = std::get_if<BaForge>(&adversary)) {
        if (f->pool_size == 0) invalid("ba_forge pool_size must be positive");
        if (f->forged_records == 0) invalid("ba_forge forged_records must be positive");
        const auto byz = byzantine_ids(roster);
        if (!f->assignment.empty() && f->assignment.size() != byz.size()) {
          invalid("ba_forge assignment needs one entry per Byzantine node");
        }
        for (auto j : f->assignment) {
          if (j >= f->pool_size) invalid("ba_forge assignment outside the pool");
        }
      }
      break;
    }
    case ConsensusKind::PoW:
      if (roster.empty()) invalid("PoW roster is empty");
      if (holds<BaForge>(adversary) || holds<LongRange>(adversary)) invalid("adversary does not apply to PoW");
      if (const auto* m = std::get_if<PrivateMine>(&adversary)) {
        if (m->launch < m->lead + 1) invalid("private_mine needs launch >= lead + 1");
        if (byzantine_ids(roster).empty()) invalid("private_mine needs a Byzantine roster node");
      }
      break;
    case ConsensusKind::PoS:
      if (holds<BaForge>(adversary) || holds<PrivateMine>(adversary)) invalid("adversary does not apply to PoS");
      break;
  }
}

std::vector<EventBatch> default_events(std::size_t horizon) {
  std::vector<EventBatch> out(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    out[t].time = t;
    out[t].payload = "E" + std::to_string(t);
  }
  return out;
}

namespace {

void run_ba(const ScenarioConfig& config, Trace& trace) {
  const auto& committee = *config.genesis.ba_committee();
  const std::set<NodeId> committee_set(committee.begin(), committee.end());
  const auto byz = byzantine_ids(config.roster);
  std::set<NodeId> byz_committee;
  for (const auto& id : byz) {
    if (committee_set.contains(id)) byz_committee.insert(id);
  }

  const auto* forge = std::get_if<BaForge>(&config.adversary);
  const std::set<NodeId> abstaining = forge && !forge->sign_agreed_records ? byz_committee : std::set<NodeId>{};

  auto bag_at = [&](const LedgerState& truth) {
    LocalStateBag bag;
    std::map<NodeId, LedgerState> claims;
    if (forge) {
      std::vector<LedgerState> pool;
      for (std::size_t j = 0; j < forge->pool_size; ++j) {
        const auto base = truncate(truth, j % (truth.size() + 1));
        pool.push_back(forge_ba_state(base, byz_committee, forge->forged_records, j));
      }
      for (std::size_t i = 0; i < byz.size(); ++i) {
        claims.emplace(byz[i], pool[forge->assignment.empty() ? 0 : forge->assignment[i]]);
      }
    }
    std::map<NodeId, LedgerState> committee_forgeries;
    for (const auto& id : byz_committee) {
      committee_forgeries.emplace(id, forge ? claims.at(id) : truth);
    }
    const auto committee_bag =
        fabricate_ba_bag(truth, committee, forge ? byz_committee : std::set<NodeId>{}, committee_forgeries);
    for (const auto& e : committee_bag.entries()) bag.insert(e.node, e.state);
    for (const auto& n : config.roster) {
      if (committee_set.contains(n.id)) continue;
      auto it = claims.find(n.id);
      bag.insert(n.id, it == claims.end() ? truth : it->second);
    }
    return bag;
  };

  trace.states.emplace_back(config.genesis);
  trace.bags.push_back(bag_at(trace.states.back()));
  for (std::size_t t = 0; t < config.horizon; ++t) {
    try {
      trace.states.push_back(step_ba(trace.states.back(), committee, abstaining, config.events[t]));
      trace.bags.push_back(bag_at(trace.states.back()));
    } catch (const Error& err) {
      throw err.at_step(t);
    }
  }
}

void run_pow(const ScenarioConfig& config, Trace& trace) {
  SeededRng rng(config.seed);
  const auto* attack = std::get_if<PrivateMine>(&config.adversary);
  const auto byz = byzantine_ids(config.roster);
  const std::set<NodeId> byz_set(byz.begin(), byz.end());

  LedgerState truth(config.genesis);
  std::optional<LedgerState> branch;

  auto close_instant = [&] {
    LocalStateBag bag;
    for (const auto& n : config.roster) {
      bag.insert(n.id, !n.honest && branch ? *branch : truth);
    }
    trace.states.push_back(truth);
    trace.bags.push_back(std::move(bag));
  };

  std::vector<NodeProfile> online;
  for (std::size_t t = 0; t < config.horizon; ++t) {
    if (attack && !branch && truth.size() == attack->launch) {
      branch = truncate(truth, attack->lead + 1).append(withheld_block(byz.front()));
    }
    online.clear();
    double p = 0.0, q = 0.0;
    for (const auto& n : config.roster) {
      if (!n.online_at(t)) continue;
      online.push_back(n);
      (n.honest ? p : q) += n.power;
    }
    trace.power_shares.emplace_back(p, q);
    try {
      const auto next = step_pow(truth, online, config.events[t], rng);
      const auto& producer = std::get<PowEvidence>(next.back().evidence()).producer;
      if (byz_set.contains(producer)) {
        ++trace.meta.adversary_blocks;
      } else {
        ++trace.meta.honest_blocks;
      }
      if (branch && byz_set.contains(producer)) {
        *branch = branch->append(withheld_block(producer));
      } else {
        close_instant();
        truth = next;
      }
    } catch (const Error& err) {
      throw err.at_step(t);
    }
  }
  close_instant();
  trace.adversary_branch = branch;
}

void run_pos_scenario(const ScenarioConfig& config, Trace& trace) {
  const LedgerState origin(config.genesis);
  if (const auto* lr = std::get_if<LongRange>(&config.adversary)) {
    const auto map = mirror_network(config.roster, lr->pool);
    auto attack = long_range_attack(config.genesis, config.events, config.roster, map, config.horizon);
    trace.states = std::move(attack.honest_states);
    trace.adversary_states = std::move(attack.adversary_states);
    trace.bags = std::move(attack.merged_bags);
    return;
  }
  trace.states = run_pos(origin, config.events, config.horizon);
  for (const auto& s : trace.states) {
    LocalStateBag bag;
    for (const auto& n : config.roster) bag.insert(n.id, s);
    trace.bags.push_back(std::move(bag));
  }
}

}  // namespace

Trace run_scenario(const ScenarioConfig& config) { return run_scenario(config, config_digest(config)); }

Trace run_scenario(const ScenarioConfig& config, const Digest& digest) {
  config.validate();
  Trace trace;
  trace.meta.seed = config.seed;
  trace.meta.config_digest = digest;
  switch (config.consensus) {
    case ConsensusKind::BA:
      run_ba(config, trace);
      break;
    case ConsensusKind::PoW:
      run_pow(config, trace);
      break;
    case ConsensusKind::PoS:
      run_pos_scenario(config, trace);
      break;
  }
  return trace;
}

// ---------------------------------------------------------------------------

void MetricSink::merge(const MetricSink& other) {
  for (const auto& [key, tally] : other.tallies_) tallies_[key].merge(tally);
}

MetricSummary summarize(const MetricKey& key, const Tally& tally) {
  MetricSummary s;
  s.key = key;
  s.n = tally.n;
  if (tally.n == 0) {
    s.meaningful = false;
    s.stderr_ = 0.5;
    s.ci99 = kZ99 * s.stderr_;
    return s;
  }
  const double n = static_cast<double>(tally.n);
  s.mean = tally.sum / n;
  if (tally.n < 2) {
    s.meaningful = false;
    s.stderr_ = 0.5 / std::sqrt(n);
  } else {
    const double var = std::max(0.0, tally.sum_sq / n - s.mean * s.mean);
    s.stderr_ = std::sqrt(var / n);
  }
  s.ci99 = kZ99 * s.stderr_;
  return s;
}

const MetricSummary* Aggregate::find(const std::string& name, std::optional<std::uint64_t> k) const {
  for (const auto& m : metrics) {
    if (m.key.name == name && m.key.k == k) return &m;
  }
  return nullptr;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SDLT_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<unsigned long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {
constexpr std::uint64_t kChunk = 64;
}

MetricSink parallel_trials(std::uint64_t trials, unsigned threads,
                           const std::function<void(std::uint64_t, MetricSink&)>& body) {
  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<MetricSink> partial(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::uint64_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::uint64_t end = std::min(trials, (c + 1) * kChunk);
        for (std::uint64_t i = c * kChunk; i < end; ++i) body(i, partial[c]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };

  const unsigned width = static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), chunks));
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < width; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  MetricSink total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

Aggregate monte_carlo(const ScenarioConfig& base, std::uint64_t trials, const Collector& collector,
                      unsigned threads) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
  base.validate();
  const auto digest = config_digest(base);
  const auto sink = parallel_trials(trials, threads, [&](std::uint64_t i, MetricSink& out) {
    ScenarioConfig cfg = base;
    cfg.seed = derive_seed(base.seed, i);
    collector(run_scenario(cfg, digest), out);
  });
  Aggregate agg;
  agg.trials = trials;
  agg.master_seed = base.seed;
  for (const auto& [key, tally] : sink.tallies()) agg.metrics.push_back(summarize(key, tally));
  return agg;
}

double catchup_oracle(double p, double q, std::uint64_t k) {
  if (!(q > 0.0 && p > q && std::abs(p + q - 1.0) <= 1e-9)) {
    throw Error(ErrorCode::InvalidShare, "catch-up needs p + q = 1 and p > q > 0");
  }
  return std::pow(q / p, static_cast<double>(k));
}

double statelessness_bound(double lambda, std::uint64_t k) {
  return std::pow(4.0 * lambda, static_cast<double>(k));
}

}  // namespace sdlt
