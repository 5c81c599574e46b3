#pragma once

// Scenario configuration read from an INI document. Every key is optional
// and falls back to the defaults below; unknown sections or keys are errors.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "vcache/consensus/pou.hpp"
#include "vcache/core/model.hpp"
#include "vcache/mobility/grid.hpp"
#include "vcache/mobility/trace.hpp"
#include "vcache/rl/agent.hpp"

namespace vcache::harness {

struct Range {
  double min = 0.0;
  double max = 0.0;

  double draw(Rng& rng) const { return min == max ? min : rng.uniform(min, max); }
};

enum class MobilitySource { grid, trace };

struct MobilityConfig {
  MobilitySource source = MobilitySource::grid;
  mobility::GridParams grid;
  std::string trace_path;
  mobility::GeoBox bbox;
  Range velocity{5.0, 15.0};  // m/s
  double slot_seconds = 1.0;  // simulated time between caching slots
  double position_jitter = 0.1;  // m; fixed per-vehicle offset, keeps positions distinct
};

struct ContentConfig {
  Range size_mb{10.0, 50.0};
  Range cache_gb{0.5, 2.5};
  Range deadline_s{5.0, 10.0};
  Range capacity_gb{5.0, 5.0};
};

struct LedgerConfig {
  bool enabled = true;
  double initial_coins = 1e6;  // minted per vehicle at genesis
};

struct ConsensusConfig {
  std::size_t stations = 5;  // M
  consensus::ConsensusParams params;
  Range cpu_ghz{5.0, 10.0};
  Range block_mb{10.0, 50.0};
  Range result_mb{1.0, 5.0};
  Range audit_kb{100.0, 500.0};
};

struct ScenarioConfig {
  std::size_t requesters = 50;
  std::size_t providers = 50;
  std::uint64_t seed = 1;
  MobilityConfig mobility;
  ChannelParams channel;
  EconomicParams economics;
  ContentConfig content;
  rl::AgentConfig agent;
  bool repair = false;  // drop infeasible pairs after refinement (DRL path only)
  LedgerConfig ledger;
  ConsensusConfig consensus;

  /// Throws InvalidArgument naming the offending `section.key`.
  void validate() const;
};

/// Throws ParseError (with `section.key`) on malformed or unknown entries and
/// InvalidArgument on out-of-range values.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::string& path);

/// INI text that parses back to `cfg`.
std::string to_ini(const ScenarioConfig& cfg);

}  // namespace vcache::harness
