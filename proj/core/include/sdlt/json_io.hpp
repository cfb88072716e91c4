#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdlt/harness.hpp"

namespace sdlt {

using Json = nlohmann::ordered_json;

/// Knobs read from the optional "experiment" block of a config file.
struct ExperimentSpec {
  std::vector<std::uint64_t> k_values{1, 2, 3, 4, 5, 6, 7, 8};
  std::uint64_t trials = 1;
  /// Observation window [observe_from, observe_to] for the probabilistic
  /// check; observe_to defaults to the end of the trace.
  std::uint64_t observe_from = 0;
  std::optional<std::uint64_t> observe_to;
  std::uint64_t subset_budget = 4096;
};

struct LoadedConfig {
  ScenarioConfig scenario;
  ExperimentSpec experiment;
};

/// Parses and validates a config document. Every problem surfaces as
/// ErrorCode::ConfigError with a path-like hint ("roster[2].power: ...").
LoadedConfig config_from_json(const Json& doc);
LoadedConfig load_config(const std::filesystem::path& path);

Json config_to_json(const ScenarioConfig& config);

/// SHA-256 of the compact config_to_json() dump without the seed, which
/// traces record separately.
Digest config_digest(const ScenarioConfig& config);

/// Hex SHA-256 of canonical_bytes(state).
std::string state_fingerprint(const LedgerState& state);

Json to_json(const NodeId& id);
Json to_json(const GenesisDescriptor& genesis);
Json to_json(const AppendRecord& record);
/// Genesis, records and fingerprint.
Json to_json(const LedgerState& state);
/// Entries as {node, length, state} where state is the fingerprint.
Json to_json(const LocalStateBag& bag);
/// The final truth in full; per-step states and bags by fingerprint.
Json to_json(const Trace& trace);
Json to_json(const Aggregate& aggregate);

/// Shortest round-trip decimal form, independent of locale.
std::string format_double(double value);

}  // namespace sdlt
