#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "sdlt/error.hpp"
#include "sdlt/harness.hpp"
#include "sdlt/json_io.hpp"
#include "sdlt/resolvers.hpp"

namespace sdlt::cli {

namespace {

bool wants_json(Format f) { return f != Format::Csv; }
bool wants_csv(Format f) { return f != Format::Json; }

/// Files are staged in memory and written together, so a refused overwrite
/// leaves the directory untouched.
class OutputSet {
 public:
  void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }
  void add_json(std::string name, const Json& doc) { add(std::move(name), doc.dump(2) + "\n"); }

  int commit(const Invocation& inv, std::ostream& err) const {
    std::error_code ec;
    std::filesystem::create_directories(inv.out_dir, ec);
    if (ec) {
      err << "error: cannot create " << inv.out_dir.string() << ": " << ec.message() << "\n";
      return kUsage;
    }
    if (!inv.force) {
      for (const auto& [name, content] : files_) {
        const auto path = inv.out_dir / name;
        if (std::filesystem::exists(path)) {
          err << "error: refusing to overwrite " << path.string() << " (pass --force)\n";
          return kUsage;
        }
      }
    }
    for (const auto& [name, content] : files_) {
      std::ofstream f(inv.out_dir / name, std::ios::binary | std::ios::trunc);
      f << content;
      if (!f) {
        err << "error: cannot write " << (inv.out_dir / name).string() << "\n";
        return kUsage;
      }
    }
    return kPass;
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

LoadedConfig load(const Invocation& inv, ConsensusKind expected) {
  auto cfg = load_config(inv.config_path);
  if (cfg.scenario.consensus != expected) {
    throw Error(ErrorCode::ConfigError, inv.command + " needs a " + std::string(to_string(expected)) + " config");
  }
  if (inv.seed) cfg.scenario.seed = *inv.seed;
  if (inv.trials) {
    if (*inv.trials == 0) throw Error(ErrorCode::ConfigError, "--trials must be positive");
    cfg.experiment.trials = *inv.trials;
  }
  return cfg;
}

std::string pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

std::string outcome_text(const ResolutionOutcome& o) { return o.is_bottom() ? "bottom" : state_fingerprint(o.value()); }

// ---------------------------------------------------------------------------

int ba_check(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto cfg = load(inv, ConsensusKind::BA);
  const auto& sc = cfg.scenario;
  const auto trace = run_scenario(sc);
  const std::uint64_t budget = std::max<std::uint64_t>(cfg.experiment.subset_budget, 4096);
  const auto report = check_strong(resolve_ba, trace, budget, sc.seed);

  std::ostringstream strong_line;
  strong_line << "strong: " << pass_fail(report.passed) << " (";
  if (report.exhaustive) {
    strong_line << "exhaustive, 2^" << report.max_bag_size << " subsets";
  } else {
    strong_line << "sampled, " << budget << " subsets per bag, not exhaustive";
  }
  strong_line << ")";
  std::string weak_line = "weak: " + pass_fail(report.weak.passed);
  if (!report.weak.passed) {
    weak_line += " at t=" + std::to_string(*report.weak.failing_step) + " (resolver returned " +
                 (report.weak.observed->is_bottom() ? "Bottom" : "a state other than S_t") + ")";
  }

  Json doc;
  doc["command"] = "ba-check";
  doc["config_digest"] = trace.meta.config_digest.hex();
  doc["seed"] = sc.seed;
  doc["committee_size"] = sc.genesis.ba_committee()->size();
  Json byz = Json::array();
  for (const auto& n : sc.roster) {
    if (!n.honest) byz.push_back(to_json(n.id));
  }
  doc["byzantine"] = std::move(byz);
  doc["steps"] = trace.states.size();
  doc["weak"] = weak_line;
  doc["strong"] = strong_line.str();
  doc["exhaustive"] = report.exhaustive;
  doc["subsets_checked"] = report.subsets_checked;
  Json classes = Json::array();
  for (const auto& [size, c] : report.by_size) {
    classes.push_back(Json{{"size", size},
                           {"truth", c.truth},
                           {"bottom", c.bottom},
                           {"wrong", c.wrong},
                           {"status", pass_fail(c.wrong == 0)}});
  }
  doc["subset_classes"] = std::move(classes);
  if (!report.weak.passed) {
    const auto t = *report.weak.failing_step;
    doc["counterexample"] = Json{{"kind", "weak"},
                                 {"step", t},
                                 {"bag", to_json(trace.bags[t])},
                                 {"truth", state_fingerprint(trace.states[t])},
                                 {"resolved", outcome_text(*report.weak.observed)}};
  } else if (report.counterexample) {
    const auto& c = *report.counterexample;
    doc["counterexample"] = Json{{"kind", "strong"},
                                 {"step", c.step},
                                 {"bag", to_json(c.subset)},
                                 {"truth", state_fingerprint(trace.states[c.step])},
                                 {"resolved", outcome_text(c.observed)}};
  }

  OutputSet files;
  if (wants_json(inv.format)) files.add_json("ba_report.json", doc);
  if (wants_csv(inv.format)) {
    std::string csv = "size,truth,bottom,wrong,status\n";
    for (const auto& [size, c] : report.by_size) {
      csv += std::to_string(size) + "," + std::to_string(c.truth) + "," + std::to_string(c.bottom) + "," +
             std::to_string(c.wrong) + "," + pass_fail(c.wrong == 0) + "\n";
    }
    files.add("ba_report.csv", std::move(csv));
  }
  if (int rc = files.commit(inv, err); rc != kPass) return rc;
  out << weak_line << "\n" << strong_line.str() << "\n";
  if (doc.contains("counterexample")) out << "counterexample: " << doc["counterexample"].dump() << "\n";
  return report.passed ? kPass : kFail;
}

// ---------------------------------------------------------------------------

ScenarioGenerator pow_generator(const ScenarioConfig& base) {
  const auto* attack = std::get_if<PrivateMine>(&base.adversary);
  const std::optional<std::size_t> launch = attack ? std::optional(attack->launch) : std::nullopt;
  return [base, launch](std::uint64_t k, std::uint64_t seed) {
    ScenarioConfig cfg = base;
    cfg.seed = seed;
    if (launch) cfg.adversary = PrivateMine{k, std::max<std::size_t>(*launch, k + 1)};
    return cfg;
  };
}

int pow_estimate(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto cfg = load(inv, ConsensusKind::PoW);
  const auto& sc = cfg.scenario;
  const auto& ex = cfg.experiment;
  ProbabilisticReport report;
  try {
    report = check_probabilistic(resolve_pow, pow_generator(sc), ex.k_values, ex.observe_from, ex.observe_to,
                                 ex.trials, sc.seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidConfiguration) throw;
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  bool ok = true;
  bool meaningful = true;
  for (const auto& r : report.rows) {
    ok = ok && r.failure_rate <= r.bound + 3.0 * r.stderr_;
    meaningful = meaningful && r.meaningful;
  }

  Json doc;
  doc["command"] = "pow-estimate";
  doc["seed"] = sc.seed;
  doc["trials"] = ex.trials;
  doc["p"] = report.p;
  doc["q"] = report.q;
  doc["lambda"] = report.lambda;
  doc["verdict"] = pass_fail(ok);
  if (!meaningful) doc["note"] = "statistically meaningless: fewer than 2 trials, stderr is the worst case";
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back(Json{{"k", r.k},
                        {"failures", r.failures},
                        {"failure_rate", r.failure_rate},
                        {"stderr", r.stderr_},
                        {"ci99", r.ci99},
                        {"bound", r.bound},
                        {"oracle", r.oracle},
                        {"within_bound", r.failure_rate <= r.bound + 3.0 * r.stderr_}});
  }
  doc["rows"] = std::move(rows);

  OutputSet files;
  if (wants_json(inv.format)) files.add_json("pow_estimate.json", doc);
  if (wants_csv(inv.format)) {
    std::string csv = "k,failure_rate,stderr,bound,oracle\n";
    for (const auto& r : report.rows) {
      csv += std::to_string(r.k) + "," + format_double(r.failure_rate) + "," + format_double(r.stderr_) + "," +
             format_double(r.bound) + "," + format_double(r.oracle) + "\n";
    }
    files.add("pow_estimate.csv", std::move(csv));
  }
  if (int rc = files.commit(inv, err); rc != kPass) return rc;
  out << "lambda=" << format_double(report.lambda) << " verdict: " << pass_fail(ok) << "\n";
  if (!meaningful) out << "note: statistically meaningless (trials < 2)\n";
  return ok ? kPass : kFail;
}

// ---------------------------------------------------------------------------

Json world_json(const Trace& trace) {
  Json j = to_json(trace);
  Json states = Json::array();
  for (const auto& s : trace.states) states.push_back(to_json(s));
  j["states"] = std::move(states);
  return j;
}

int pos_attack(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto cfg = load(inv, ConsensusKind::PoS);
  const auto& sc = cfg.scenario;
  const auto* lr = std::get_if<LongRange>(&sc.adversary);
  const auto w = lr ? falsify_pos_statelessness(sc, lr->pool) : falsify_pos_statelessness(sc);

  Json doc;
  doc["command"] = "pos-attack";
  doc["t"] = w.steps;
  doc["witness"] = w.produced;
  doc["verdict"] = w.verdict;
  if (!w.world_a.states.empty()) {
    doc["bags_equal"] = w.bags_equal;
    doc["truths_equal"] = w.truths_equal;
    Json map = Json::object();
    for (const auto& [from, to] : w.map.pairs()) {
      if (from != to) map[from.to_string()] = to.to_string();
    }
    doc["mirror"] = std::move(map);
    doc["truth_a"] = state_fingerprint(w.world_a.states.back());
    doc["truth_b"] = state_fingerprint(w.world_b.states.back());
    doc["bag"] = to_json(w.world_a.bags.back());
  }

  OutputSet files;
  if (wants_json(inv.format)) {
    files.add_json("witness.json", doc);
    if (!w.world_a.states.empty()) {
      files.add_json("world_a.json", world_json(w.world_a));
      files.add_json("world_b.json", world_json(w.world_b));
    }
  }
  if (wants_csv(inv.format)) {
    std::string csv = "field,value\n";
    csv += "witness," + std::string(w.produced ? "true" : "false") + "\n";
    csv += "t," + std::to_string(w.steps) + "\n";
    if (!w.world_a.states.empty()) {
      csv += "bags_equal," + std::string(w.bags_equal ? "true" : "false") + "\n";
      csv += "truths_equal," + std::string(w.truths_equal ? "true" : "false") + "\n";
      csv += "truth_a," + state_fingerprint(w.world_a.states.back()) + "\n";
      csv += "truth_b," + state_fingerprint(w.world_b.states.back()) + "\n";
    }
    files.add("witness.csv", std::move(csv));
  }
  if (int rc = files.commit(inv, err); rc != kPass) return rc;
  if (!w.world_a.states.empty()) {
    out << "bags_equal: " << (w.bags_equal ? "true" : "false") << ", truths_equal: " << (w.truths_equal ? "true" : "false")
        << "\n";
  }
  out << w.verdict << "\n";
  return w.produced ? kPass : kFail;
}

// ---------------------------------------------------------------------------

Collector run_collector(const ScenarioConfig& sc) {
  return [sc](const Trace& trace, MetricSink& sink) {
    switch (sc.consensus) {
      case ConsensusKind::BA:
        sink.observe("weak", check_weak(resolve_ba, trace).passed ? 1.0 : 0.0);
        break;
      case ConsensusKind::PoW: {
        sink.observe("adversary_share",
                     sc.horizon ? static_cast<double>(trace.meta.adversary_blocks) / static_cast<double>(sc.horizon) : 0.0);
        if (const auto* m = std::get_if<PrivateMine>(&sc.adversary)) {
          bool caught_up = false;
          for (std::size_t t = 0; t < trace.bags.size() && !caught_up; ++t) {
            const auto out = resolve_pow(trace.states.front().genesis(), trace.bags[t]);
            caught_up = !out.matches(trace.states[t]);
          }
          sink.observe("catchup", m->lead, caught_up ? 1.0 : 0.0);
        }
        break;
      }
      case ConsensusKind::PoS: {
        sink.observe("distinct_truths", !trace.adversary_states.empty() &&
                                                !(trace.adversary_states.back() == trace.states.back())
                                            ? 1.0
                                            : 0.0);
        break;
      }
    }
  };
}

double max_lambda(const ScenarioConfig& sc) {
  double lambda = 0.0;
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    double p = 0.0, q = 0.0;
    for (const auto& n : sc.roster) {
      if (n.online_at(t)) (n.honest ? p : q) += n.power;
    }
    lambda = std::max(lambda, p * q);
  }
  return lambda;
}

int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto cfg = load_config(inv.config_path);
  if (inv.seed) cfg.scenario.seed = *inv.seed;
  if (inv.trials) {
    if (*inv.trials == 0) throw Error(ErrorCode::ConfigError, "--trials must be positive");
    cfg.experiment.trials = *inv.trials;
  }
  const auto& sc = cfg.scenario;
  const auto trace = run_scenario(sc);

  OutputSet files;
  if (wants_json(inv.format)) files.add_json("trace.json", to_json(trace));
  if (wants_csv(inv.format)) {
    std::string csv = "t,length,truth,bag_size\n";
    for (std::size_t t = 0; t < trace.states.size(); ++t) {
      csv += std::to_string(t) + "," + std::to_string(trace.states[t].size()) + "," +
             state_fingerprint(trace.states[t]) + "," + std::to_string(trace.bags[t].size()) + "\n";
    }
    files.add("trace.csv", std::move(csv));
  }

  if (cfg.experiment.trials > 1) {
    const auto agg = monte_carlo(sc, cfg.experiment.trials, run_collector(sc));
    if (wants_json(inv.format)) files.add_json("aggregates.json", to_json(agg));
    if (wants_csv(inv.format)) {
      const double lambda = sc.consensus == ConsensusKind::PoW ? max_lambda(sc) : 0.0;
      std::string csv = "metric,k,estimate,stderr,bound\n";
      for (const auto& m : agg.metrics) {
        csv += m.key.name + "," + (m.key.k ? std::to_string(*m.key.k) : "") + "," + format_double(m.mean) + "," +
               format_double(m.stderr_) + ",";
        if (m.key.name == "catchup" && m.key.k) csv += format_double(statelessness_bound(lambda, *m.key.k));
        csv += "\n";
      }
      files.add("metrics.csv", std::move(csv));
    }
  }
  if (int rc = files.commit(inv, err); rc != kPass) return rc;
  out << "steps: " << trace.states.size() - 1 << ", final length: " << trace.states.back().size() << "\n";
  return kPass;
}

int guarded(int (*body)(const Invocation&, std::ostream&, std::ostream&), const Invocation& inv, std::ostream& out,
            std::ostream& err) {
  try {
    return body(inv, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigError:
      case ErrorCode::InvalidScenario:
      case ErrorCode::InvalidConfiguration:
      case ErrorCode::InvalidGenesis:
      case ErrorCode::InvalidShare:
      case ErrorCode::PoolExhausted:
        return kUsage;
      default:
        return kFail;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFail;
  }
}

}  // namespace

int cmd_ba_check(const Invocation& inv, std::ostream& out, std::ostream& err) { return guarded(ba_check, inv, out, err); }
int cmd_pow_estimate(const Invocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(pow_estimate, inv, out, err);
}
int cmd_pos_attack(const Invocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(pos_attack, inv, out, err);
}
int cmd_run(const Invocation& inv, std::ostream& out, std::ostream& err) { return guarded(run, inv, out, err); }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stateless-DLT simulator", "sdlt"};
  app.require_subcommand(1);
  Invocation inv;
  std::uint64_t seed = 0, trials = 0;
  std::string format = "both";

  const std::pair<const char*, const char*> commands[] = {
      {"ba-check", "Weak and strong statelessness of a BA scenario"},
      {"pow-estimate", "Monte Carlo failure rate of the PoW resolver per truncation depth"},
      {"pos-attack", "Two-world long-range witness for a PoS scenario"},
      {"run", "Execute one scenario (and aggregate when trials > 1)"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", inv.config_path, "Scenario config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--trials", trials, "Override the trial count");
    sub->add_option("--out", inv.out_dir, "Output directory (created if absent)");
    sub->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_flag("--force", inv.force, "Overwrite existing output files");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kPass : kUsage;
  }

  for (const auto* sub : app.get_subcommands()) inv.command = sub->get_name();
  const auto* sub = app.get_subcommand(inv.command);
  if (sub->count("--seed")) inv.seed = seed;
  if (sub->count("--trials")) inv.trials = trials;
  inv.format = format == "json" ? Format::Json : format == "csv" ? Format::Csv : Format::Both;

  if (inv.command == "ba-check") return cmd_ba_check(inv, out, err);
  if (inv.command == "pow-estimate") return cmd_pow_estimate(inv, out, err);
  if (inv.command == "pos-attack") return cmd_pos_attack(inv, out, err);
  return cmd_run(inv, out, err);
}

}  // namespace sdlt::cli
