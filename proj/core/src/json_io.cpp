#include "sdlt/json_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sdlt/codec.hpp"
#include "sdlt/error.hpp"

namespace sdlt {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

const Json& field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) bad(path + "." + key, "missing");
  return *it;
}

const Json* optional_field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::uint64_t as_u64(const Json& v, const std::string& path) {
  if (!v.is_number_unsigned()) {
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    bad(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double as_double(const Json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "expected a number");
  return v.get<double>();
}

bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "expected a string");
  return v.get<std::string>();
}

NodeId as_node(const Json& v, const std::string& path) {
  try {
    return NodeId::parse(as_string(v, path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    bad(path, e.what());
  }
}

const Json& as_array(const Json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "expected an array");
  return v;
}

std::vector<NodeId> node_list(const Json& v, const std::string& path) {
  std::vector<NodeId> out;
  const auto& arr = as_array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_node(arr[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ConsensusKind parse_kind(const Json& v, const std::string& path) {
  const auto s = as_string(v, path);
  if (s == "BA") return ConsensusKind::BA;
  if (s == "PoW") return ConsensusKind::PoW;
  if (s == "PoS") return ConsensusKind::PoS;
  bad(path, "unknown consensus '" + s + "' (expected BA, PoW or PoS)");
}

GenesisDescriptor parse_genesis(const Json& g, ConsensusKind kind) {
  const std::string path = "genesis";
  const auto* tag_v = optional_field(g, "tag", path);
  std::string tag = tag_v ? as_string(*tag_v, path + ".tag") : "";
  const auto* committee = optional_field(g, "committee", path);
  const auto* stake = optional_field(g, "initial_stake", path);
  try {
    switch (kind) {
      case ConsensusKind::BA:
        if (!committee) bad(path + ".committee", "missing for BA");
        if (stake) bad(path + ".initial_stake", "only allowed for PoS");
        return GenesisDescriptor::ba(std::move(tag), node_list(*committee, path + ".committee"));
      case ConsensusKind::PoW:
        if (committee || stake) bad(path, "PoW genesis takes only a tag");
        return GenesisDescriptor::pow(std::move(tag));
      case ConsensusKind::PoS: {
        if (!stake) bad(path + ".initial_stake", "missing for PoS");
        if (committee) bad(path + ".committee", "only allowed for BA");
        if (!stake->is_object()) bad(path + ".initial_stake", "expected an object of id: amount");
        StakeMap map;
        for (const auto& [key, amount] : stake->items()) {
          const std::string p = path + ".initial_stake." + key;
          NodeId id;
          try {
            id = NodeId::parse(key);
          } catch (const Error& e) {
            bad(p, e.what());
          }
          map[id] = as_u64(amount, p);
        }
        return GenesisDescriptor::pos(std::move(tag), std::move(map));
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    bad(path, e.what());
  }
  bad(path, "unreachable");
}

NodeProfile parse_profile(const Json& n, const std::string& path) {
  NodeProfile p;
  p.id = as_node(field(n, "id", path), path + ".id");
  if (const auto* h = optional_field(n, "honest", path)) p.honest = as_bool(*h, path + ".honest");
  if (const auto* w = optional_field(n, "power", path)) p.power = as_double(*w, path + ".power");
  if (const auto* o = optional_field(n, "online", path)) {
    const auto& arr = as_array(*o, path + ".online");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      p.online_schedule.insert(as_u64(arr[i], path + ".online[" + std::to_string(i) + "]"));
    }
  }
  return p;
}

EventBatch parse_event(const Json& e, const std::string& path, std::uint64_t index) {
  EventBatch b;
  b.time = index;
  if (const auto* t = optional_field(e, "time", path)) b.time = as_u64(*t, path + ".time");
  b.payload = "E" + std::to_string(index);
  if (const auto* p = optional_field(e, "payload", path)) b.payload = as_string(*p, path + ".payload");
  if (const auto* ts = optional_field(e, "transfers", path)) {
    const auto& arr = as_array(*ts, path + ".transfers");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string tp = path + ".transfers[" + std::to_string(i) + "]";
      Transfer t;
      t.from = as_node(field(arr[i], "from", tp), tp + ".from");
      t.to = as_node(field(arr[i], "to", tp), tp + ".to");
      t.amount = as_u64(field(arr[i], "amount", tp), tp + ".amount");
      b.transfers.push_back(t);
    }
  }
  if (const auto* c = optional_field(e, "coalition", path)) b.coalition = node_list(*c, path + ".coalition");
  return b;
}

AdversaryStrategy parse_adversary(const Json& a) {
  const std::string path = "adversary";
  const auto kind = as_string(field(a, "kind", path), path + ".kind");
  auto u64_or = [&](const char* key, std::uint64_t fallback) {
    const auto* v = optional_field(a, key, path);
    return v ? as_u64(*v, path + "." + key) : fallback;
  };
  if (kind == "none") return NoAdversary{};
  if (kind == "ba_forge") {
    BaForge f;
    f.pool_size = u64_or("pool_size", 1);
    f.forged_records = u64_or("forged_records", 1);
    if (const auto* s = optional_field(a, "sign_agreed_records", path)) {
      f.sign_agreed_records = as_bool(*s, path + ".sign_agreed_records");
    }
    if (const auto* as = optional_field(a, "assignment", path)) {
      const auto& arr = as_array(*as, path + ".assignment");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        f.assignment.push_back(as_u64(arr[i], path + ".assignment[" + std::to_string(i) + "]"));
      }
    }
    return f;
  }
  if (kind == "private_mine") {
    PrivateMine m;
    m.lead = u64_or("lead", 1);
    m.launch = u64_or("launch", m.lead + 1);
    return m;
  }
  if (kind == "long_range") return LongRange{node_list(field(a, "pool", path), path + ".pool")};
  bad(path + ".kind", "unknown adversary '" + kind + "' (expected none, ba_forge, private_mine or long_range)");
}

ExperimentSpec parse_experiment(const Json& x) {
  const std::string path = "experiment";
  ExperimentSpec ex;
  if (const auto* k = optional_field(x, "k", path)) {
    ex.k_values.clear();
    const auto& arr = as_array(*k, path + ".k");
    for (std::size_t i = 0; i < arr.size(); ++i) ex.k_values.push_back(as_u64(arr[i], path + ".k[" + std::to_string(i) + "]"));
    if (ex.k_values.empty()) bad(path + ".k", "must not be empty");
  }
  if (const auto* v = optional_field(x, "trials", path)) ex.trials = as_u64(*v, path + ".trials");
  if (ex.trials == 0) bad(path + ".trials", "must be positive");
  if (const auto* v = optional_field(x, "observe_from", path)) ex.observe_from = as_u64(*v, path + ".observe_from");
  if (const auto* v = optional_field(x, "observe_to", path)) ex.observe_to = as_u64(*v, path + ".observe_to");
  if (ex.observe_to && *ex.observe_to < ex.observe_from) bad(path + ".observe_to", "must be >= observe_from");
  if (const auto* v = optional_field(x, "subset_budget", path)) ex.subset_budget = as_u64(*v, path + ".subset_budget");
  if (ex.subset_budget == 0) bad(path + ".subset_budget", "must be positive");
  return ex;
}

std::string kind_name(const AdversaryStrategy& a) {
  switch (a.index()) {
    case 0: return "none";
    case 1: return "ba_forge";
    case 2: return "private_mine";
    default: return "long_range";
  }
}

}  // namespace

LoadedConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) bad("$", "config must be a JSON object");
  LoadedConfig out;
  auto& sc = out.scenario;
  sc.consensus = parse_kind(field(doc, "consensus", "$"), "consensus");
  sc.horizon = as_u64(field(doc, "horizon", "$"), "horizon");
  if (const auto* s = optional_field(doc, "seed", "$")) sc.seed = as_u64(*s, "seed");
  sc.genesis = parse_genesis(field(doc, "genesis", "$"), sc.consensus);

  const auto& roster = as_array(field(doc, "roster", "$"), "roster");
  for (std::size_t i = 0; i < roster.size(); ++i) {
    sc.roster.push_back(parse_profile(roster[i], "roster[" + std::to_string(i) + "]"));
  }
  if (const auto* ev = optional_field(doc, "events", "$")) {
    const auto& arr = as_array(*ev, "events");
    for (std::size_t i = 0; i < arr.size(); ++i) sc.events.push_back(parse_event(arr[i], "events[" + std::to_string(i) + "]", i));
  } else {
    sc.events = default_events(sc.horizon);
  }
  sc.adversary = NoAdversary{};
  if (const auto* a = optional_field(doc, "adversary", "$")) sc.adversary = parse_adversary(*a);
  if (const auto* x = optional_field(doc, "experiment", "$")) out.experiment = parse_experiment(*x);

  try {
    sc.validate();
  } catch (const Error& e) {
    bad("$", e.what());
  }
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

// ---------------------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

Json to_json(const NodeId& id) { return id.to_string(); }

Json to_json(const GenesisDescriptor& genesis) {
  Json j;
  j["kind"] = std::string(to_string(genesis.kind()));
  j["tag"] = genesis.tag();
  if (const auto& c = genesis.ba_committee()) {
    Json arr = Json::array();
    for (const auto& id : *c) arr.push_back(to_json(id));
    j["committee"] = std::move(arr);
  }
  if (const auto& s = genesis.initial_stake()) {
    Json obj = Json::object();
    for (const auto& [id, amount] : *s) obj[id.to_string()] = amount;
    j["initial_stake"] = std::move(obj);
  }
  return j;
}

Json to_json(const AppendRecord& record) {
  Json j;
  j["digest"] = record.payload_digest().hex();
  j["kind"] = std::string(to_string(record.kind()));
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, BaEvidence>) {
          Json arr = Json::array();
          for (const auto& id : e.signers) arr.push_back(to_json(id));
          j["signers"] = std::move(arr);
        } else if constexpr (std::is_same_v<T, PowEvidence>) {
          j["work"] = e.work;
          j["producer"] = to_json(e.producer);
        } else {
          Json sigs = Json::array();
          for (const auto& s : e.signers) sigs.push_back(Json{{"signer", to_json(s.signer)}, {"stake", s.stake}});
          Json ts = Json::array();
          for (const auto& t : e.transfers) {
            ts.push_back(Json{{"from", to_json(t.from)}, {"to", to_json(t.to)}, {"amount", t.amount}});
          }
          j["signers"] = std::move(sigs);
          j["transfers"] = std::move(ts);
        }
      },
      record.evidence());
  return j;
}

std::string state_fingerprint(const LedgerState& state) {
  const auto bytes = canonical_bytes(state);
  return Digest::of(std::span<const std::uint8_t>(bytes)).hex();
}

Json to_json(const LedgerState& state) {
  Json j;
  j["genesis"] = to_json(state.genesis());
  j["length"] = state.size();
  j["fingerprint"] = state_fingerprint(state);
  Json records = Json::array();
  for (const auto* r : state.record_view()) records.push_back(to_json(*r));
  j["records"] = std::move(records);
  return j;
}

Json to_json(const LocalStateBag& bag) {
  Json arr = Json::array();
  for (const auto& e : bag.entries()) {
    arr.push_back(Json{{"node", to_json(e.node)}, {"length", e.state.size()}, {"state", state_fingerprint(e.state)}});
  }
  return arr;
}

Json to_json(const Trace& trace) {
  Json j;
  j["seed"] = trace.meta.seed;
  j["config_digest"] = trace.meta.config_digest.hex();
  if (!trace.power_shares.empty()) {
    j["honest_blocks"] = trace.meta.honest_blocks;
    j["adversary_blocks"] = trace.meta.adversary_blocks;
  }
  j["final_state"] = to_json(trace.states.back());
  Json steps = Json::array();
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    Json step;
    step["t"] = t;
    step["length"] = trace.states[t].size();
    step["truth"] = state_fingerprint(trace.states[t]);
    if (t < trace.adversary_states.size()) step["adversary_truth"] = state_fingerprint(trace.adversary_states[t]);
    step["bag"] = to_json(trace.bags[t]);
    steps.push_back(std::move(step));
  }
  j["steps"] = std::move(steps);
  if (trace.adversary_branch) j["adversary_branch"] = to_json(*trace.adversary_branch);
  return j;
}

Json to_json(const Aggregate& aggregate) {
  Json j;
  j["trials"] = aggregate.trials;
  j["master_seed"] = aggregate.master_seed;
  Json arr = Json::array();
  for (const auto& m : aggregate.metrics) {
    Json row;
    row["metric"] = m.key.name;
    row["k"] = m.key.k ? Json(*m.key.k) : Json(nullptr);
    row["n"] = m.n;
    row["estimate"] = m.mean;
    row["stderr"] = m.stderr_;
    row["ci99"] = m.ci99;
    if (!m.meaningful) row["note"] = "statistically meaningless";
    arr.push_back(std::move(row));
  }
  j["metrics"] = std::move(arr);
  return j;
}

Json config_to_json(const ScenarioConfig& config) {
  Json j;
  j["consensus"] = std::string(to_string(config.consensus));
  j["horizon"] = config.horizon;
  j["seed"] = config.seed;
  Json g = to_json(config.genesis);
  g.erase("kind");
  j["genesis"] = std::move(g);
  Json roster = Json::array();
  for (const auto& n : config.roster) {
    Json r{{"id", to_json(n.id)}, {"honest", n.honest}, {"power", n.power}};
    if (!n.online_schedule.empty()) r["online"] = n.online_schedule;
    roster.push_back(std::move(r));
  }
  j["roster"] = std::move(roster);
  Json events = Json::array();
  for (const auto& e : config.events) {
    Json ej{{"time", e.time}, {"payload", e.payload}};
    if (!e.transfers.empty()) {
      Json ts = Json::array();
      for (const auto& t : e.transfers) ts.push_back(Json{{"from", to_json(t.from)}, {"to", to_json(t.to)}, {"amount", t.amount}});
      ej["transfers"] = std::move(ts);
    }
    if (e.coalition) {
      Json c = Json::array();
      for (const auto& id : *e.coalition) c.push_back(to_json(id));
      ej["coalition"] = std::move(c);
    }
    events.push_back(std::move(ej));
  }
  j["events"] = std::move(events);
  Json a;
  a["kind"] = kind_name(config.adversary);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BaForge>) {
          a["pool_size"] = s.pool_size;
          a["forged_records"] = s.forged_records;
          a["assignment"] = s.assignment;
          a["sign_agreed_records"] = s.sign_agreed_records;
        } else if constexpr (std::is_same_v<T, PrivateMine>) {
          a["lead"] = s.lead;
          a["launch"] = s.launch;
        } else if constexpr (std::is_same_v<T, LongRange>) {
          Json pool = Json::array();
          for (const auto& id : s.pool) pool.push_back(to_json(id));
          a["pool"] = std::move(pool);
        }
      },
      config.adversary);
  j["adversary"] = std::move(a);
  return j;
}

Digest config_digest(const ScenarioConfig& config) {
  auto doc = config_to_json(config);
  doc.erase("seed");
  return Digest::of(doc.dump());
}

}  // namespace sdlt
